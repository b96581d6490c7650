"""Android shared-preferences XML: a <map> of typed key/value entries."""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .errors import MalformedXmlError


def parse_shared_prefs(xml: bytes) -> dict[str, object]:
    """Decode a shared-preferences document into {key: typed value}.

    Supported entry tags: string (element text), boolean, int, long,
    float (value attribute). Unknown tags are ignored; entries without a
    name are malformed.
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise MalformedXmlError(f"not well-formed XML: {exc}") from exc
    if root.tag != "map":
        raise MalformedXmlError(f"expected <map> root, found <{root.tag}>")
    entries: dict[str, object] = {}
    for child in root:
        name = child.get("name")
        if name is None:
            raise MalformedXmlError(f"<{child.tag}> entry without a name attribute")
        if child.tag == "string":
            entries[name] = (child.text or "").strip()
        elif child.tag == "boolean":
            entries[name] = child.get("value") == "true"
        elif child.tag in ("int", "long"):
            try:
                entries[name] = int(child.get("value", ""))
            except ValueError as exc:
                raise MalformedXmlError(f"bad integer value for {name!r}") from exc
        elif child.tag == "float":
            try:
                entries[name] = float(child.get("value", ""))
            except ValueError as exc:
                raise MalformedXmlError(f"bad float value for {name!r}") from exc
        # other tags (set, etc.) carry nothing we recover
    return entries
