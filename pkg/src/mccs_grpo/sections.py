"""Single-pass parser for the ``<think>...</think><report>...</report>`` layout."""

from __future__ import annotations

import re
from dataclasses import astuple, dataclass

_TAG = re.compile(r"<(/?)(think|report)>", re.IGNORECASE)


@dataclass(frozen=True)
class FormatCheck:
    has_think: bool
    has_report: bool
    ordered: bool
    balanced: bool
    think_nonempty: bool
    report_nonempty: bool
    no_stray_text: bool

    def flags(self) -> tuple[bool, ...]:
        return astuple(self)


def extract_sections(text: str) -> tuple[FormatCheck, str, str]:
    """Parse ``text`` into structural flags plus think and report bodies.

    A section is well formed when its opening tag is directly followed by the
    matching closing tag with no other tag in between. ``balanced`` requires
    every tag to belong to a well-formed section and each section kind to
    occur at most once. When no well-formed report section exists the report
    body falls back to the whole text with think sections and stray tags cut
    out, so unstructured outputs can still be labeled.
    """
    tags = [(m.start(), m.end(), m.group(1) == "/", m.group(2).lower()) for m in _TAG.finditer(text)]
    sections: dict[str, list[tuple[int, int, int, int]]] = {"think": [], "report": []}
    balanced = True
    i = 0
    while i < len(tags):
        start, end, closing, kind = tags[i]
        nxt = tags[i + 1] if i + 1 < len(tags) else None
        if not closing and nxt is not None and nxt[2] and nxt[3] == kind:
            # (outer start, inner start, inner end, outer end)
            sections[kind].append((start, end, nxt[0], nxt[1]))
            i += 2
        else:
            balanced = False
            i += 1
    if len(sections["think"]) > 1 or len(sections["report"]) > 1:
        balanced = False

    think = sections["think"][0] if sections["think"] else None
    report = sections["report"][0] if sections["report"] else None
    think_body = text[think[1]:think[2]] if think else ""
    ordered = bool(think and report and think[3] <= report[0])

    covered = sorted(s for group in sections.values() for s in group)
    outside, pos = [], 0
    for outer_start, _, _, outer_end in covered:
        outside.append(text[pos:outer_start])
        pos = outer_end
    outside.append(text[pos:])
    no_stray_text = not "".join(outside).strip()

    if report:
        report_body = text[report[1]:report[2]]
    else:
        pieces, pos = [], 0
        for outer_start, _, _, outer_end in sections["think"]:
            pieces.append(text[pos:outer_start])
            pos = outer_end
        pieces.append(text[pos:])
        report_body = _TAG.sub(" ", "".join(pieces))

    check = FormatCheck(
        has_think=think is not None,
        has_report=report is not None,
        ordered=ordered,
        balanced=balanced,
        think_nonempty=bool(think_body.strip()),
        report_nonempty=bool(report is not None and report_body.strip()),
        no_stray_text=no_stray_text,
    )
    return check, think_body, report_body
