import { describe, expect, it } from "vitest";

import { loadKeywords, loadWeights, scoreTokens, topicLabel, toxicityScore } from "../src/scorers";

const WEIGHTS = loadWeights({
  terms: { vile: 0.9, nasty: 0.6, "utterly vile": 0.95 },
});

describe("toxicityScore", () => {
  it("takes the max weight among matched terms", () => {
    expect(toxicityScore("a nasty and vile remark", WEIGHTS)).toBe(0.9);
  });

  it("matches multi-word terms", () => {
    expect(toxicityScore("an utterly vile remark", WEIGHTS)).toBe(0.95);
  });

  it("scores clean text zero", () => {
    expect(toxicityScore("a kind remark", WEIGHTS)).toBe(0);
  });

  it("respects token boundaries", () => {
    expect(toxicityScore("unnastyish", WEIGHTS)).toBe(0);
  });

  it("is case-insensitive", () => {
    expect(toxicityScore("VILE!", WEIGHTS)).toBe(0.9);
  });

  it("rejects weights outside [0,1]", () => {
    expect(() => loadWeights({ terms: { bad: 1.5 } })).toThrow();
  });
});

describe("topicLabel", () => {
  const CATEGORIES = loadKeywords({
    categories: { sport: ["match", "goal"], news: ["report", "match"] },
  });

  it("picks the category with the most keyword hits", () => {
    expect(topicLabel("the goal and the match", CATEGORIES)).toBe("sport");
  });

  it("breaks ties lexicographically", () => {
    expect(topicLabel("goal report", CATEGORIES)).toBe("news");
  });

  it("defaults to other on zero hits", () => {
    expect(topicLabel("nothing relevant", CATEGORIES)).toBe("other");
  });
});

describe("scoreTokens", () => {
  it("keeps internal hyphens and apostrophes", () => {
    expect(scoreTokens("Anti-aging isn't 2023!")).toEqual(["anti-aging", "isn't", "2023"]);
  });

  it("handles empty text", () => {
    expect(scoreTokens("")).toEqual([]);
  });
});
