"""tws: a translator writing system.

Four user-authored spec files (scanner rules, grammar, static-semantics
constraints, code templates) are compiled into a working compiler for a small
imperative language; compiled programs run on a stack machine with a full
step trace.  A workspace layer tracks staleness between the spec slots and
the derived artifacts, and an HTTP service plus CLI expose the whole thing.
"""

__version__ = "0.1.0"
