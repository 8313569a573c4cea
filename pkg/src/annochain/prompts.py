"""Versioned prompt templates for the chat-model gateway.

Each template carries a fixed system message, named user slots, and the
assistant prefix used to anchor the reply format. Bodies are stable
resources: tests compare rendered prompts against golden files.
"""

from __future__ import annotations

from dataclasses import dataclass

PROMPT_VERSION = "1"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    system_text: str
    user_template: str
    user_slot_names: tuple[str, ...]
    assistant_prefix: str

    def render_user(self, **slots: str) -> str:
        missing = set(self.user_slot_names) - set(slots)
        if missing:
            raise KeyError(f"missing slots for {self.template_id}: {sorted(missing)}")
        return self.user_template.format(**slots)


MERGE_PARALLEL = PromptTemplate(
    template_id="merge_parallel",
    system_text=(
        "You are a text integration expert. Here are the parallel annotations of two "
        "annotators. Please help me merge their annotations to form a summary annotation.\n"
        "\n"
        "Guidelines:\n"
        "Rule 1: For parts with the same semantic meaning in caption1 and caption2, adopt "
        "a merging strategy and avoid repeating the same content.\n"
        "Rule 2: For parts unique to caption1 or caption2, incorporate them into the final "
        "description at an appropriate position.\n"
        "Rule 3: For parts where caption1 and caption2 contradict each other, select one "
        "caption's description for the consolidation, and do not include any reference to "
        "caption1 or caption2 in the description.\n"
        "Rule 4: During the merging process, avoid redundant mentions of caption1 and "
        "caption2. No intermediate reasoning is needed; just provide the final consolidated "
        "result.\n"
        "\n"
        "Remember, your output should be a high-quality caption that is concise, "
        "informative, and coherent!"
    ),
    user_template="### Caption 1: {caption1}\n### Caption 2: {caption2}",
    user_slot_names=("caption1", "caption2"),
    assistant_prefix="Here's the merged parallel caption:",
)

MERGE_SEQUENTIAL = PromptTemplate(
    template_id="merge_sequential",
    system_text=(
        "You are a text integration expert. Caption1 is the original annotation result, "
        "and Caption2 is the annotator's supplementation and correction.\n"
        "\n"
        "Guidelines:\n"
        "Rule 1: Caption2 will include corrections to Caption1, possibly revising parts of "
        "the description in Caption1, as well as supplementing areas where Caption1's "
        "description was insufficient.\n"
        "Rule 2: For parts with the same semantic meaning in Caption1 and Caption2, adopt a "
        "merging strategy and avoid repeating the same content.\n"
        "Rule 3: For parts that are missing in Caption1 but present in Caption2, "
        "incorporate the relevant parts from Caption2 into Caption1 at an appropriate "
        "position.\n"
        "Rule 4: If there is a conflict between the descriptions in Caption1 and Caption2, "
        "prioritize the description in Caption2 and replace the corresponding part in "
        "Caption1.\n"
        "\n"
        "Remember, your output should be a high-quality caption that is concise, "
        "informative, and coherent!"
    ),
    user_template="### Caption 1: {caption1}\n### Caption 2: {caption2}",
    user_slot_names=("caption1", "caption2"),
    assistant_prefix="Here's the merged sequential caption:",
)

DENOISE = PromptTemplate(
    template_id="denoise",
    system_text=(
        "Please help me improve the following text according to the steps below.\n"
        "\n"
        "Guidelines:\n"
        "Rule 1: Correct obvious typos.\n"
        'Rule 2: Remove meaningless connecting words such as "then", "and", "furthermore" '
        'and "next".\n'
        "Rule 3: Format the output according to the sample provided."
    ),
    user_template="### Annotation Text: {caption}",
    user_slot_names=("caption",),
    assistant_prefix="Here's the processed caption:",
)

EXTRACT_UNITS = PromptTemplate(
    template_id="extract_units",
    system_text=(
        "Please help me extract and segment the semantic units according to the following "
        "rules and referring to the output example:\n"
        "\n"
        "Guidelines:\n"
        "Unit Definition: Semantic unit = object name + associated attributes; A single "
        "sentence may contain multiple independent units; Each unit must contain only one "
        "object name.\n"
        "Attribute Specifications: Valid attributes: absolute_location (position in the "
        "overall image), relative_location (Position relative to other objects), colour, "
        'amount (Explicitly extract indefinite articles "a"/"an" as standalone attributes. '
        'Include numerical values e.g., "two", "three" and quantifiers (e.g., "some", '
        '"several")), size, shape, material, object description, other (All other '
        "unclassified attributes are 'other', If there are multiple, please separate them "
        "with commas), Omit any attributes that do not exist; Prohibit attribute overlap "
        'or duplication; Pronoun-based locations (e.g., "this", "that") must be replaced '
        "with specific referenced objects.\n"
        'Extraction Principles: Prioritize extracting the "name" field separately; Create '
        "independent units for multiple objects sharing attributes; Absolute and relative "
        "locations cannot coexist in the same unit; Omit unspecified/ambiguous "
        "attributes.\n"
        "Output Requirements: Present only final results without reasoning processes.\n"
        "\n"
        "Example:\n"
        "Input Example 1: The sea surface appears green, with a patch of green seaweed "
        "visible under the bridge in the upper right area.\n"
        "Output Example 1:\n"
        "[\n"
        "    {\n"
        '        "name": "sea surface",\n'
        '        "attributes": {\n'
        '            "colour": "green",\n'
        '            "other": ["appears"]\n'
        "        }\n"
        "    },\n"
        "    {\n"
        '        "name": "seaweed",\n'
        '        "attributes": {\n'
        '            "amount": "a patch of",\n'
        '            "colour": "green",\n'
        '            "relative_location": "under the bridge in the upper right area",\n'
        '            "other": ["visible"]\n'
        "        }\n"
        "    }\n"
        "]"
    ),
    user_template="### Caption: {caption}",
    user_slot_names=("caption",),
    assistant_prefix="Here are the Semantic Units:",
)

GENERATE_QUESTIONS = PromptTemplate(
    template_id="generate_questions",
    system_text=(
        "You are an annotation question-generation assistant. Given a segment of "
        "annotation text, please design questions according to the following rules:\n"
        "\n"
        "Guidelines:\n"
        "Rule 1: Generate a total of 5 questions.\n"
        "Rule 2: The five questions should cover the beginning, middle, and later parts of "
        "the annotation text.\n"
        "Rule 3: Design the questions in the order of the text and number them "
        "sequentially (Q1-Q5).\n"
        "Rule 4: The five questions should progress from general to detailed, starting "
        "with broad questions and moving to fine-grained ones.\n"
        "Rule 5: The questions can be about objects or their attributes (e.g., color, "
        "quantity, location, shape, size, etc.).\n"
        "\n"
        "Example:\n"
        "Question 1: What kind of image is this describing?\n"
        "Question 2: What color is the sea surface?\n"
        "Question 3: What's in the top left corner of the picture?\n"
        "Question 4: Where is the parking lot located in the picture?\n"
        "Question 5: Do all houses have swimming pools?"
    ),
    user_template="### Annotation Text: {caption}",
    user_slot_names=("caption",),
    assistant_prefix="Here are the generated questions:",
)

GUIDE_FIRST_PERSON = PromptTemplate(
    template_id="guide_first_person",
    system_text=(
        "You will be provided with an image. Your task is to generate a detailed and "
        "informative caption for the image, adhering to the following guidelines:\n"
        "\n"
        "Guidelines:\n"
        "Rule 1: The caption should be as comprehensive as possible. Identify and describe "
        "all discernible entities in the image along with their attributes. Attributes may "
        "include (but are not limited to): Absolute position (via image orientation), "
        "Relative position (in reference to other objects), Color, quantity, size, shape, "
        "material, etc. Avoid describing entities that cannot be clearly identified.\n"
        "Rule 2: Structure the caption in the following order: First: Begin with a global "
        "description of the entire image; Second, Provide a description of the objects "
        "located at the center of the image. Last, Describe the entire image "
        "systematically, starting from the upper-left corner and proceeding in a "
        "structured manner with the spatial relationships between objects.\n"
        "Rule 3: If there are more than 10 instances of a particular object type, leverage "
        "approximate quantifiers (e.g., many, some, a row, a column, a cluster, etc.) "
        "instead of exact counts.\n"
        "Rule 4: Ensure the caption is concise but information-rich. Each sentence should "
        "contain meaningful and non-redundant information. Avoid vague, repetitive, or "
        "empty expressions."
    ),
    user_template="",
    user_slot_names=(),
    assistant_prefix="",
)

GUIDE_SUBSEQUENT = PromptTemplate(
    template_id="guide_subsequent",
    system_text=(
        "You will be provided with an image and its corresponding caption. Your task is to "
        "review and revise the caption to ensure it accurately and comprehensively "
        "reflects the content of the image, following the rules below:\n"
        "\n"
        "Guidelines:\n"
        "Rule 1: Examine whether the caption includes all identifiable entities present in "
        "the image, along with their corresponding attributes. Attributes may include (but "
        "are not limited to): Absolute position (according to image orientation) Relative "
        "position (with respect to other objects) Color, quantity, size, shape, material, "
        "etc. If any entity is missing, add it along with its attributes. If any attribute "
        "of a described entity is missing, supplement it accordingly.\n"
        "Rule 2: If the caption contains any inaccuracies (e.g., incorrect quantity, "
        "color, or other attributes of an entity), make the necessary corrections.\n"
        "Rule 3: Output only the revised caption. Do not include or refer to the original "
        "caption in your response."
    ),
    user_template="",
    user_slot_names=(),
    assistant_prefix="",
)

TEMPLATES: dict[str, PromptTemplate] = {
    t.template_id: t
    for t in (
        MERGE_PARALLEL,
        MERGE_SEQUENTIAL,
        DENOISE,
        EXTRACT_UNITS,
        GENERATE_QUESTIONS,
        GUIDE_FIRST_PERSON,
        GUIDE_SUBSEQUENT,
    )
}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise KeyError(f"unknown template: {template_id!r}") from None
