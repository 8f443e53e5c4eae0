/**
 * Heuristic scorers.  These deliberately match the core toolkit's
 * builtin rules token for token, so a sidecar wrapping the same
 * lexicon files returns identical scores (the boundary-equivalence
 * guarantee the whole module exists to prove).
 */

const TOKEN_RE = /[\p{L}\p{N}]+(?:['’-][\p{L}\p{N}]+)*/gu;

export function scoreTokens(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

function phraseHits(tokens: string[], phrase: string[]): number {
  const width = phrase.length;
  if (width === 0 || width > tokens.length) return 0;
  let hits = 0;
  for (let i = 0; i + width <= tokens.length; i++) {
    let match = true;
    for (let j = 0; j < width; j++) {
      if (tokens[i + j] !== phrase[j]) {
        match = false;
        break;
      }
    }
    if (match) hits++;
  }
  return hits;
}

export type WeightLexicon = Map<string, number>;

export function loadWeights(obj: unknown): WeightLexicon {
  if (typeof obj !== "object" || obj === null || typeof (obj as any).terms !== "object") {
    throw new Error("weighted lexicon needs a 'terms' object");
  }
  const weights: WeightLexicon = new Map();
  for (const [term, weight] of Object.entries((obj as any).terms as Record<string, unknown>)) {
    if (typeof weight !== "number" || weight < 0 || weight > 1) {
      throw new Error(`weight for ${JSON.stringify(term)} outside [0,1]`);
    }
    if (!term.trim()) throw new Error("empty toxicity term");
    weights.set(term.toLowerCase(), weight);
  }
  return weights;
}

/** Max weight among matched terms; 0 when nothing matches. */
export function toxicityScore(text: string, weights: WeightLexicon): number {
  const tokens = scoreTokens(text);
  let best = 0;
  for (const [term, weight] of weights) {
    if (weight <= best) continue;
    if (phraseHits(tokens, term.split(" ")) > 0) best = weight;
  }
  return best;
}

export type KeywordMap = Map<string, string[]>;

export function loadKeywords(obj: unknown): KeywordMap {
  if (typeof obj !== "object" || obj === null || typeof (obj as any).categories !== "object") {
    throw new Error("keyword map needs a 'categories' object");
  }
  const categories: KeywordMap = new Map();
  for (const [category, keywords] of Object.entries((obj as any).categories as Record<string, unknown>)) {
    if (!Array.isArray(keywords) || !keywords.every((k) => typeof k === "string" && k.trim())) {
      throw new Error(`category ${JSON.stringify(category)} needs a list of keywords`);
    }
    categories.set(category, (keywords as string[]).map((k) => k.toLowerCase()));
  }
  return categories;
}

/** Category with the most keyword occurrences; ties go to the
 * lexicographically smallest category; "other" when nothing hits. */
export function topicLabel(text: string, categories: KeywordMap): string {
  const tokens = scoreTokens(text);
  let bestLabel = "other";
  let bestHits = 0;
  for (const category of [...categories.keys()].sort()) {
    let hits = 0;
    for (const keyword of categories.get(category)!) {
      hits += phraseHits(tokens, keyword.split(" "));
    }
    if (hits > bestHits) {
      bestLabel = category;
      bestHits = hits;
    }
  }
  return bestLabel;
}
