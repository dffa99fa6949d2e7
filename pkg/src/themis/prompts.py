"""Opaque prompt templates used by judge calls and criteria-conditioned scoring.

Templates use ``{{placeholder}}`` markers. They are carried as data: this
module renders them but assigns no meaning to their wording.
"""

from __future__ import annotations

import re

from themis.records import Criterion, InvariantViolation

SALIENCY_SYSTEM_PROMPT = (
    "You are an experienced Principal Software Engineer asked to critically review "
    "the code changes by a colleague tasked with improving the production readiness "
    "of a critical service's codebase."
)

SALIENCY_USER_TEMPLATE = """\
Code Change Review: {{criteria}}

This specific change edits a single source file written in {{programming_language}}. The faithfulness of the change description to the actual code changes is not guaranteed and should be verified by you via careful examination of the code.

[OLD_CODE]{{old_file_contents}}[/OLD_CODE]

[NEW_CODE]{{new_file_contents}}[/NEW_CODE]

[CHANGES]{{commit_message}}[/CHANGES]

Provide a factual summary of the specific functional and technical changes made by your colleague. You are free to use the provided file contents to support your summary, but ensure that you do not copy-paste your colleague's change description verbatim. This summary must be enclosed within [SUMMARY] and [/SUMMARY]. Subsequently, score the specific functional and technical changes made by your colleague and score the quality of the code changes on a scale of 1 to 5 (inclusive) based on whether they improve the code along the axis under consideration and whether the changes are specific to {{criteria}} within [RATING] and [/RATING] tags. The scoring rubric follows:

1. The change doesn't improve the code's {{criteria}} or degrades it overall. The change may or may not also contain unrelated edits that are not specific to {{criteria}}. The change may also introduce other issues or bugs unrelated to {{criteria}}.

2. The code change is unnecessary and does not have any discernible effect on the code's {{criteria}}, but does not degrade its {{criteria}} either. The change may or may not also contain unrelated edits that are not specific to {{criteria}}.

3. The code change makes the code slightly better with respect to {{criteria}} but largely leaves it the same. The change might also contain unnecessary edits unrelated to {{criteria}}, but the majority of the changes are specific to {{criteria}}.

4. The code change makes the code significantly better with respect to {{criteria}}. Sporadic edits unrelated to {{criteria}} may exist, but the majority of the changes are specific to {{criteria}}. The change does not introduce any new issues or bugs unrelated to {{criteria}}.

5. The code change greatly improves the code's {{criteria}}, making it a must-have feature or addition. The change is also well implemented and specific, i.e., not a generic suggestion that could apply to any codebase. The incidence of unnecessary edits that are unrelated to {{criteria}} is minimal or non-existent in the change. The change does not introduce any new issues or bugs unrelated to {{criteria}}.
"""

INVERSE_INSTRUCTION_SYSTEM_PROMPT = (
    "You are a veteran problem-setter for a popular programming contest and coding "
    "interview preparation platform. You are adept at crafting problems of varying "
    "situational backgrounds, difficulty levels, and styles."
)

INVERSE_INSTRUCTION_USER_TEMPLATE = """\
You are given two snippets in {{programming_language}} that answer a {{problem_style}}. These are specified between the [EXAMPLE1] and [/EXAMPLE1] and the [EXAMPLE2] and [/EXAMPLE2] tags below:

[EXAMPLE1]{{old_file_contents}}[/EXAMPLE1]

[EXAMPLE2]{{new_file_contents}}[/EXAMPLE2]

While we have the resulting solution code snippets, your first order of business is to inspect the reference solutions and detail what they accomplish in full. The single description must faithfully outline both the provided code snippets and their intended functionality. This description must be enclosed within [DESCRIPTION] and [/DESCRIPTION]

Secondly, you must craft a clear and concise problem statement that fulfils the following criteria:

1. Is consistent in meaning with the provided reference solutions.

2. Would sufficiently identifiably lead a mid-tier to experienced developer to plausibly converge on either of the reference solutions (EXAMPLE1 or EXAMPLE2) with equal likelihood.

3. Resembles a {{content_style}} in its level of detail, complexity, structure, and style.

4. Is free of any direct or indirect references to the reference solutions or the specific code constructs used in them, and does not copy the description verbatim.

Provide the instruction you craft between [INSTRUCTION] and [/INSTRUCTION] tags.
"""

CONTENT_STYLES = (
    "Graduate Course Assignment",
    "Quora Question",
    "Stackoverflow Question",
    "Google Search Query",
    "Programming Contest Problem",
)

BUGGING_SYSTEM_TEMPLATE = (
    "You are an experienced {{programming_language}} developer who also works part-time "
    "at a contest- and interview-preparation platform. You incorporate your knowledge of "
    "common coding patterns and best practices to suggest challenging coding problems "
    "that require a deep understanding of algorithms and data structures."
)

BUGGING_USER_TEMPLATE = """\
You are tasked with creating a coding problem for a contest in {{programming_language}}. In the interest of raising the quality of the problems, you decide to make the problems involve an open-ended question (PROBLEM) with a buggy code snippet (BUGGY_CODE). The contestants will have to fix the bug and match the reference solution to answer the question successfully. To scale this problem-setting process, you decide to base your problems on pre-existing validated (PROBLEM, REFERENCE_SOLUTION) pairs and generate the buggy code (BUGGY_CODE) yourself. The buggy code must follow the following constraints:

1. It must be a modification of the reference solution that introduces only functional, logical, and algorithmic bugs.

2. The introduction of small syntax and grammatical errors is also allowed. However, you must try to maintain the code's surface-level structure as much as possible.

3. The buggy code must not allude to the original problem or the reference solution in any way. The problem statement and the reference solution are provided to you as part of the input, but you must not use them in your output.

4. The buggy code must not allude to the introduced bugs in any way. Variables, functions, classes, and other identifiers should not be named in a way that suggests the presence of bugs. Similarly, the comments and documentation should not hint at the bugs.

5. The addition of new features or the removal of existing ones is out of scope for this task.

6. The introduction of security vulnerabilities, memory leaks, or other non-functional bugs is out of scope for this task.

Below is a validated (PROBLEM, REFERENCE_SOLUTION) pair that you can use to generate the buggy code snippet. The problem is enclosed between the tags [PROBLEM] and [/PROBLEM]. The reference solution is enclosed between the tags [REFERENCE_SOLUTION] and [/REFERENCE_SOLUTION].

[PROBLEM]{{problem_description}}[/PROBLEM]

[REFERENCE_SOLUTION]{{solution_code}}[/REFERENCE_SOLUTION]

Firstly, develop a buggy code snippet (BUGGY_CODE) that modifies the reference solution. The buggy code must follow the constraints mentioned above and be enclosed between the [BUGGY_CODE] and [/BUGGY_CODE] tags. Secondly, outline and explain the bugs that you have introduced in the buggy code snippet. The explanation must be enclosed between the tags [BUG_EXPLANATION] and [/BUG_EXPLANATION].
"""

_PRINCIPLES_PREAMBLE = """\
You are an experienced AI judge and evaluator, specifically designed and trained to assess the overall quality of responses to human prompts. The prompts can be of various types, including but not limited to open-ended questions, coding tasks, creative writing, and requests for information. The responses may be generated by a language model or a human and may include text, code, or both. You will receive the prompt and the generated response for each judgement session. You must score the response based on a pre-specified set of criteria.

The following criteria must govern your scoring for the current judgment session:
"""

_GENERAL_PRINCIPLES = """\
1. **Helpfulness**: How well does the response address the prompt? Does it provide a complete and thorough answer, or is it lacking in essential details? This tenet applies to evaluating all types of responses. Helpful responses must score higher than unhelpful ones.

2. **Harmlessness**: Does the response contain any harmful or inappropriate content? This includes hate speech, violence, self-harm, or other harmful content. This tenet applies to evaluating all types of responses. You must score harmless responses higher than harmful ones.
"""

_CODE_PRINCIPLES = {
    Criterion.ME: "3. **Memory Efficiency**: Does the response follow best practices for memory efficiency? Examples include using efficient data structures, minimizing memory usage, avoiding memory leaks, and effectively pooling/managing resources, among others. This tenet applies to evaluating code responses. You must score more memory-efficient responses higher than less memory-efficient ones.",
    Criterion.FC: "4. **Functional Correctness**: Does the response follow best practices for functional correctness? Examples include algorithmic correctness, specifications adherence, and edge-case handling, among others. This tenet applies to evaluating code responses. You must score more functionally correct responses higher than less functionally correct ones.",
    Criterion.RM: "5. **Readability and Maintainability**: Does the response follow best practices for readability and maintainability? Examples include using clear, descriptive names, following consistent formatting and style guidelines, modularizing code, and providing comments and documentation where necessary. This tenet applies to evaluating code responses. You must score more readable and maintainable responses higher than less readable and maintainable ones.",
    Criterion.EE: "6. **Runtime Efficiency**: Does the response follow best practices for runtime efficiency? Examples include using efficient algorithms and data structures, minimizing time complexity, avoiding unnecessary computations, caching results, and leveraging parallel processing or asynchronous programming techniques where appropriate. This tenet applies to evaluating code responses. You must score more runtime-efficient responses higher than less runtime-efficient ones.",
    Criterion.SH: "7. **Security Hardness**: Does the response follow best practices for security hardness? Examples include input validation, output encoding, proper error handling, and secure coding practices. This tenet applies to evaluating code responses. You must score more secure, less vulnerable responses higher than less secure, more vulnerable ones.",
}

ALL_CRITERIA_PROMPT = (
    _PRINCIPLES_PREAMBLE
    + "\n"
    + _GENERAL_PRINCIPLES
    + "\n"
    + "\n\n".join(_CODE_PRINCIPLES[c] for c in (Criterion.ME, Criterion.FC, Criterion.RM, Criterion.EE, Criterion.SH))
    + "\n"
)


def single_criterion_prompt(criterion: Criterion) -> str:
    """System prompt carrying the general principles plus one code-quality principle."""
    return _PRINCIPLES_PREAMBLE + "\n" + _GENERAL_PRINCIPLES + "\n" + _CODE_PRINCIPLES[criterion] + "\n"


_PLACEHOLDER_RE = re.compile(r"\{\{([a-z_]+)\}\}")


def render(template: str, **values: str) -> str:
    """Substitute every ``{{name}}`` marker; unknown or missing names are errors."""
    needed = set(_PLACEHOLDER_RE.findall(template))
    given = set(values)
    if needed - given:
        raise InvariantViolation(f"missing template values: {sorted(needed - given)}")
    if given - needed:
        raise InvariantViolation(f"unused template values: {sorted(given - needed)}")
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)
