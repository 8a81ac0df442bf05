// Rule drafting, finding display, and the draft -> API body conversion the
// editor submits.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  describeRule,
  draftToBody,
  parseValueList,
  renderFindings,
  renderGroups,
} from "../src/rules.js";
import type { ApplyResult, ValidationReport } from "../src/types.js";

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(__dirname, "fixtures", name), "utf-8"),
  ) as T;
}

export const GROUPING_DRAFT = {
  dimension: "time-d",
  sourceLevel: "location-in-transcription",
  conditionAttributes: ["location"],
  targetLevel: "location-group",
  targetAttributes: ["grp"],
  rules: [
    {
      condition: [{ attr: "location", op: "in" as const, values: ["begin", "end"] }],
      target: { grp: "extreme" },
    },
    {
      condition: [
        { attr: "location", op: "not-in" as const, values: ["begin", "end"] },
      ],
      target: { grp: "middle" },
    },
  ],
};

describe("rule drafting", () => {
  it("converts a draft to the structured API body", () => {
    const body = draftToBody(GROUPING_DRAFT);
    expect(body).toEqual({
      dimension: "time-d",
      structure: {
        source_level: "location-in-transcription",
        condition_attributes: ["location"],
        target_level: "location-group",
        target_attributes: ["grp"],
      },
      data: [
        {
          condition: [{ attr: "location", op: "in", values: ["begin", "end"] }],
          target: { grp: "extreme" },
        },
        {
          condition: [
            { attr: "location", op: "not-in", values: ["begin", "end"] },
          ],
          target: { grp: "middle" },
        },
      ],
    });
  });

  it("describes rules in the text grammar's style", () => {
    expect(describeRule(GROUPING_DRAFT.rules[0])).toBe(
      "if location in {'begin', 'end'} then grp={extreme}",
    );
  });

  it("parses comma-separated member lists", () => {
    expect(parseValueList(" begin , end ,")).toEqual(["begin", "end"]);
    expect(parseValueList("")).toEqual([]);
  });
});

describe("finding display", () => {
  it("renders the recorded incomplete-rule findings inline", () => {
    const report = fixture<ValidationReport>("validate_incomplete.json");
    const html = renderFindings(report.findings);
    expect(report.ok).toBe(false);
    expect(html).toContain("incomplete");
    expect(html).toContain("middle");
    expect(html).toContain('class="finding error"');
  });

  it("confirms a clean report", () => {
    expect(renderFindings([])).toContain("No findings");
  });

  it("previews the groups from a recorded apply", () => {
    const result = fixture<ApplyResult>("apply_result.json");
    expect(result.applied).toBe(true);
    const html = renderGroups(result.change!.groups);
    expect(html).toContain("extreme");
    expect(html).toContain("begin, end");
  });
});
