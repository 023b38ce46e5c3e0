from pathlib import Path

import pytest

from qeforge.frontend import parse
from qeforge.ir.core import Block, IrModule, Operation, Region
from qeforge.ir.parser import parse_module
from qeforge.ir.printer import print_module
from qeforge.ir import types as T
from qeforge.ir.types import SymbolAttr
from qeforge.irgen import GenOptions, generate_ir
from qeforge.manager import PHASE1
from qeforge.passes import PassContext, run_pipeline
from qeforge.target import load_target_file

DATA = Path(__file__).parent / "data"
CORPUS = Path(__file__).parent / "corpus"
GOLDEN = Path(__file__).parent / "golden"

CORPUS_FILES = sorted(CORPUS.glob("*.qasm"))
assert len(CORPUS_FILES) >= 10


def corpus_ids():
    return [p.stem for p in CORPUS_FILES]


@pytest.fixture(scope="session")
def mock3q():
    root, cals, diags = load_target_file(str(DATA / "mock3q.cfg"))
    assert root is not None, [d.message for d in diags]
    return root, cals


@pytest.fixture(scope="session")
def mock1q():
    root, cals, diags = load_target_file(str(DATA / "mock1q.cfg"))
    assert root is not None, [d.message for d in diags]
    return root, cals


@pytest.fixture(params=CORPUS_FILES, ids=corpus_ids())
def corpus_program(request):
    return request.param.read_text()


def read_corpus(name: str) -> str:
    return (CORPUS / f"{name}.qasm").read_text()


def gen_module(source: str, num_shots: int = 1000) -> IrModule:
    program, diags = parse(source)
    assert not any(d.is_error for d in diags), [d.message for d in diags]
    module, gen_diags = generate_ir(program, GenOptions(num_shots))
    assert not any(d.is_error for d in gen_diags), \
        [d.message for d in gen_diags]
    return module


def run_phase1(source: str, target, upto: int = len(PHASE1)) -> IrModule:
    root, cals = target
    module = gen_module(source)
    ctx = PassContext(calibrations=cals, target=root, dt=cals.dt)
    diags = run_pipeline(module, PHASE1[:upto], ctx)
    assert not any(d.is_error for d in diags), [d.message for d in diags]
    return module


def clone_module(module: IrModule) -> IrModule:
    copy, diags = parse_module(print_module(module))
    assert not any(d.is_error for d in diags)
    return copy


def hand_coverage_module() -> IrModule:
    """Hand-built module exercising ops no pipeline stage emits:
    func.call, qcs.send/synchronize, and the stretch type."""
    m = IrModule()
    m.add(Operation("oq3.declare_variable",
                    attrs={"symbol": SymbolAttr("elastic"),
                           "type": T.stretch()}))
    helper = Block([m.new_value(T.i1())])
    helper.ops.append(Operation("func.return", [helper.args[0]]))
    m.add(Operation("func.func", attrs={"sym_name": SymbolAttr("echo")},
                    regions=[Region([helper])]))

    main = Block()
    one = m.make_op("builtin.int_const", result_types=[T.i1()],
                    attrs={"value": 1})
    main.ops.append(one)
    call = Operation("func.call", [one.results[0]], [m.new_value(T.i1())],
                     attrs={"callee": SymbolAttr("echo")})
    main.ops.append(call)
    toggled = m.make_op("builtin.xor", [one.results[0], call.results[0]],
                        result_types=[T.i1()])
    main.ops.append(toggled)
    main.ops.append(Operation("qcs.send", [toggled.results[0]],
                              attrs={"to": "hub0", "bit": 0}))
    main.ops.append(Operation("qcs.synchronize",
                              [one.results[0], call.results[0]]))
    main.ops.append(Operation("func.return"))
    m.add(Operation("func.func", attrs={"sym_name": SymbolAttr("main")},
                    regions=[Region([main])]))
    return m


@pytest.fixture(scope="session")
def cal_module_text():
    return (DATA / "mock3q_cals.qeir").read_text()
