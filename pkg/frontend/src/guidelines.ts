/** Annotation guidelines shown to annotators, by role in the chain. */

export const FIRST_PERSON_GUIDELINES = [
  "Describe the image as comprehensively as possible. Identify and describe " +
    "every visible object, including its location, colour, amount, size, " +
    "shape, material, and other notable attributes.",
  "Speak naturally and continuously; filler words are removed automatically.",
  "Use approximate quantities (\"several\", \"many\") instead of exact counts " +
    "when counting is impractical.",
  "Keep each sentence information-rich and non-redundant. Avoid vague, " +
    "repetitive, or empty expressions.",
];

export const SUBSEQUENT_GUIDELINES = [
  "Read the prior merged caption first; it opens the reading timer.",
  "Add only what is missing: objects or attributes the caption does not " +
    "cover yet. Do not restate what is already written.",
  "If the caption contains an inaccuracy (wrong quantity, colour, or other " +
    "attribute), state the correction explicitly.",
  "When you can find no further information, press \"complete\" to finish " +
    "the session.",
];

export function guidelinesFor(roundIndex: number): string[] {
  return roundIndex <= 1 ? FIRST_PERSON_GUIDELINES : SUBSEQUENT_GUIDELINES;
}
