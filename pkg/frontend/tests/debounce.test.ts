import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce } from "../src/debounce";

describe("debounce", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("collapses a rapid burst into one trailing call", () => {
    const fn = vi.fn();
    const wrapped = debounce(fn, 100);
    for (let i = 0; i < 25; i++) {
      wrapped();
      vi.advanceTimersByTime(10); // always inside the window
    }
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(100);
    expect(fn).toHaveBeenCalledTimes(1);
  });

  it("passes the latest arguments", () => {
    const fn = vi.fn();
    const wrapped = debounce(fn, 50);
    wrapped("first");
    wrapped("second");
    vi.advanceTimersByTime(50);
    expect(fn).toHaveBeenCalledWith("second");
  });

  it("fires again for separated bursts", () => {
    const fn = vi.fn();
    const wrapped = debounce(fn, 50);
    wrapped();
    vi.advanceTimersByTime(60);
    wrapped();
    vi.advanceTimersByTime(60);
    expect(fn).toHaveBeenCalledTimes(2);
  });

  it("cancel drops the pending call", () => {
    const fn = vi.fn();
    const wrapped = debounce(fn, 50);
    wrapped();
    wrapped.cancel();
    vi.advanceTimersByTime(200);
    expect(fn).not.toHaveBeenCalled();
  });
});
