import { describe, expect, it } from "vitest";

import { parseScanpathCsv } from "../src/scanpath.js";

describe("parseScanpathCsv", () => {
  it("reads bare x,y lines", () => {
    expect(parseScanpathCsv("1.5,2\n3,4.25\n")).toEqual([
      { x: 1.5, y: 2 },
      { x: 3, y: 4.25 },
    ]);
  });

  it("locates x and y columns in a headered export", () => {
    const text = "image_id,subject_id,fixation_index,x,y\nimg,s0,1,7,3\nimg,s0,2,2.5,8\n";
    expect(parseScanpathCsv(text)).toEqual([
      { x: 7, y: 3 },
      { x: 2.5, y: 8 },
    ]);
  });

  it("matches header names case-insensitively", () => {
    expect(parseScanpathCsv("Y,X\n2,1\n")).toEqual([{ x: 1, y: 2 }]);
  });

  it("skips blank lines", () => {
    expect(parseScanpathCsv("1,2\n\n3,4\n\n")).toHaveLength(2);
  });

  it("rejects non-finite coordinates", () => {
    expect(() => parseScanpathCsv("1,2\nfoo,4\n")).toThrow(/row 2/i);
    expect(() => parseScanpathCsv("x,y\n1,Infinity\n")).toThrow();
  });

  it("yields no fixations for empty input", () => {
    expect(parseScanpathCsv("\n\n")).toEqual([]);
  });
});
