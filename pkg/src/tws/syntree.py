"""Syntax tree values shared by the parser, constrainer and code generator.

Leaves come from named terminals and keep their lexeme; interior nodes are
built by grammar tree directives.  Annotation slots stay None until the
constrainer fills them in on its own copy of the tree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator


@dataclass
class SynTree:
    kind: str
    lexeme: str | None = None
    children: list["SynTree"] = field(default_factory=list)
    pos: tuple[int, int] = (0, 0)
    ann_type: str | None = None
    ann_addr: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.lexeme is not None


def preorder(tree: SynTree) -> Iterator[tuple[SynTree, int]]:
    """Yield (node, depth) pairs, parent before children, children left to right."""
    stack = [(tree, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        for child in reversed(node.children):
            stack.append((child, depth + 1))


def copy_tree(tree: SynTree, strip_annotations: bool = False) -> SynTree:
    # children-first over a reversed preorder, so arbitrarily deep trees
    # copy without recursion
    copies: dict[int, SynTree] = {}
    order = [node for node, _ in preorder(tree)]
    for node in reversed(order):
        copies[id(node)] = SynTree(
            kind=node.kind,
            lexeme=node.lexeme,
            children=[copies[id(c)] for c in node.children],
            pos=node.pos,
            ann_type=None if strip_annotations else node.ann_type,
            ann_addr=None if strip_annotations else node.ann_addr,
        )
    return copies[id(tree)]


def to_indented_text(tree: SynTree) -> str:
    """One node per line, two-character '. ' indent per depth level, LF endings."""
    lines = []
    for node, depth in preorder(tree):
        label = node.kind
        if node.lexeme is not None:
            label += f"({node.lexeme})"
        if node.ann_type is not None:
            label += f": {node.ann_type}"
        if node.ann_addr is not None:
            label += f" @{node.ann_addr}"
        lines.append(". " * depth + label)
    return "\n".join(lines) + "\n"


def tree_to_obj(tree: SynTree) -> dict:
    # key order is part of the wire format: kind, lexeme?, pos, type?, addr?, children
    obj: dict = {"kind": tree.kind}
    if tree.lexeme is not None:
        obj["lexeme"] = tree.lexeme
    obj["pos"] = {"line": tree.pos[0], "col": tree.pos[1]}
    if tree.ann_type is not None:
        obj["type"] = tree.ann_type
    if tree.ann_addr is not None:
        obj["addr"] = tree.ann_addr
    obj["children"] = [tree_to_obj(c) for c in tree.children]
    return obj


def tree_from_obj(obj: dict) -> SynTree:
    return SynTree(
        kind=obj["kind"],
        lexeme=obj.get("lexeme"),
        children=[tree_from_obj(c) for c in obj["children"]],
        pos=(obj["pos"]["line"], obj["pos"]["col"]),
        ann_type=obj.get("type"),
        ann_addr=obj.get("addr"),
    )


def to_json(tree: SynTree) -> str:
    return json.dumps(tree_to_obj(tree), ensure_ascii=False)


def from_json(text: str) -> SynTree:
    return tree_from_obj(json.loads(text))
