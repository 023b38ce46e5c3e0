"""Generic SSA IR containers: values, operations, regions, modules.

A module owns a single-block top region; every region in this IR is
single-block (structured control flow only). Values are compared by
identity; canonical numbering is assigned by the printer.
"""

from __future__ import annotations

from typing import Iterator, Optional

from qeforge.ir.types import AttrValue, IrType, SymbolAttr


class Value:
    __slots__ = ("id", "type")

    def __init__(self, vid: int, ty: IrType):
        self.id = vid
        self.type = ty

    def __repr__(self):
        return f"%{self.id}: {self.type}"


class Operation:
    __slots__ = ("name", "operands", "results", "attrs", "regions")

    def __init__(self, name: str, operands=(), results=(), attrs=None,
                 regions=()):
        self.name = name
        self.operands: list[Value] = list(operands)
        self.results: list[Value] = list(results)
        self.attrs: dict[str, AttrValue] = dict(attrs or {})
        self.regions: list[Region] = list(regions)

    @property
    def dialect(self) -> str:
        return self.name.split(".", 1)[0]

    def attr(self, key: str, default=None):
        return self.attrs.get(key, default)

    @property
    def symbol_name(self) -> Optional[str]:
        for key in ("sym_name", "symbol"):
            value = self.attrs.get(key)
            if isinstance(value, SymbolAttr):
                return value.name
        return None

    def body(self) -> "Block":
        """Single block of the op's single region."""
        assert len(self.regions) == 1 and len(self.regions[0].blocks) == 1
        return self.regions[0].blocks[0]

    def walk(self) -> Iterator["Operation"]:
        yield self
        for region in self.regions:
            for block in region.blocks:
                for op in block.ops:
                    yield from op.walk()

    def __repr__(self):
        return f"<op {self.name}>"


class Block:
    __slots__ = ("args", "ops")

    def __init__(self, args=(), ops=()):
        self.args: list[Value] = list(args)
        self.ops: list[Operation] = list(ops)


class Region:
    __slots__ = ("blocks",)

    def __init__(self, blocks=()):
        self.blocks: list[Block] = list(blocks)

    @staticmethod
    def with_block(args=(), ops=()) -> "Region":
        return Region([Block(args, ops)])


class IrModule:
    """Top-level container: one block of symbol definitions and a value pool."""

    def __init__(self):
        self.body = Region.with_block()
        self._next_value = 0

    @property
    def block(self) -> Block:
        return self.body.blocks[0]

    @property
    def ops(self) -> list[Operation]:
        return self.block.ops

    def new_value(self, ty: IrType) -> Value:
        v = Value(self._next_value, ty)
        self._next_value += 1
        return v

    def make_op(self, name: str, operands=(), result_types=(), attrs=None,
                regions=()) -> Operation:
        results = [self.new_value(t) for t in result_types]
        return Operation(name, operands, results, attrs, regions)

    def add(self, op: Operation) -> Operation:
        self.block.ops.append(op)
        return op

    def walk(self) -> Iterator[Operation]:
        for op in self.block.ops:
            yield from op.walk()

    def symbol_table(self) -> dict[str, Operation]:
        table: dict[str, Operation] = {}
        for op in self.block.ops:
            name = op.symbol_name
            if name is not None and name not in table:
                table[name] = op
        return table

    def find_symbol(self, name: str) -> Optional[Operation]:
        return self.symbol_table().get(name)


def walk_blocks(region: Region) -> Iterator[Block]:
    for block in region.blocks:
        yield block
        for op in block.ops:
            for nested in op.regions:
                yield from walk_blocks(nested)


def replace_uses(mapping: dict[Value, Value], ops: list[Operation]) -> None:
    """Rewrite operand references per `mapping`, recursing into regions."""
    for op in ops:
        for i, operand in enumerate(op.operands):
            if operand in mapping:
                op.operands[i] = mapping[operand]
        for region in op.regions:
            for block in region.blocks:
                replace_uses(mapping, block.ops)


def clone_op(op: Operation, value_map: dict[Value, Value],
             dest: IrModule, strict: bool = True) -> Operation:
    """Deep-copy `op` into `dest`, remapping operands through value_map.

    Result values and block arguments get fresh identities recorded in
    value_map. With strict=True an operand missing from value_map is an
    internal error; with strict=False it is kept as-is (same-module clones).
    """
    operands = []
    for v in op.operands:
        if v in value_map:
            operands.append(value_map[v])
        elif strict:
            raise KeyError(f"operand {v!r} of {op.name} not in value map")
        else:
            operands.append(v)
    results = []
    for v in op.results:
        nv = dest.new_value(v.type)
        value_map[v] = nv
        results.append(nv)
    regions = []
    for region in op.regions:
        blocks = []
        for block in region.blocks:
            args = []
            for v in block.args:
                nv = dest.new_value(v.type)
                value_map[v] = nv
                args.append(nv)
            new_block = Block(args)
            new_block.ops = [clone_op(inner, value_map, dest, strict)
                             for inner in block.ops]
            blocks.append(new_block)
        regions.append(Region(blocks))
    return Operation(op.name, operands, results, dict(op.attrs), regions)


def collect_used_values(op: Operation, used: set) -> None:
    for o in op.walk():
        used.update(o.operands)
