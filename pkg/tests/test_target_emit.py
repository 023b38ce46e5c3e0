"""Target tree construction and mock-ISA emission."""

import threading

import pytest

from qeforge.diagnostics import Category, Diagnostic, Severity, collect, error
from qeforge.emitter import emit_instrument
from qeforge.passes import PassContext
from qeforge.passes.localize import localize
from qeforge.target import TargetNode, load_target, parse_config

from conftest import DATA, read_corpus, run_phase1

# Instruction opcodes that correspond 1:1 with IR ops, per role.
COUNTED = {
    "PLAY": ("pulse.play",),
    "ACQ": ("pulse.capture",),
    "SHIFT_PHASE": ("pulse.shift_phase",),
    "SET_PHASE": ("pulse.set_phase",),
    "SHIFT_FREQ": ("pulse.shift_frequency",),
    "SET_FREQ": ("pulse.set_frequency",),
    "RECV": ("qcs.recv",),
    "BCAST": ("qcs.broadcast", "qcs.send"),
    "BR_IF": ("scf.if",),
    "LOOP": ("scf.for",),
    "SHOT_INIT": ("qcs.shot_init",),
    "INIT": ("qcs.init",),
    "FINI": ("qcs.finalize",),
    "DELAY": ("pulse.delay", "quir.delay"),
}


def opcode_census(binary: str) -> dict:
    counts: dict = {}
    for line in binary.splitlines()[1:]:
        if ":" not in line or line.startswith("PATCH"):
            continue
        opcode = line.split(":", 1)[1].split()[0]
        counts[opcode] = counts.get(opcode, 0) + 1
    return counts


def sequence_expansion_counts(module) -> dict:
    """IR op counts with sequences expanded once per call site."""
    calls: dict = {}
    main = module.find_symbol("main")
    counts: dict = {}

    def bump(name):
        counts[name] = counts.get(name, 0) + 1

    def walk(ops):
        for op in ops:
            if op.name == "pulse.call_sequence":
                seq = module.find_symbol(op.attr("callee").name)
                walk(seq.body().ops)
                continue
            bump(op.name)
            for region in op.regions:
                for block in region.blocks:
                    walk(block.ops)

    walk(main.body().ops)
    return counts


class TestTargetConfig:
    def test_three_qubit_tree_matches_topology(self, mock3q):
        root, _ = mock3q
        leaves = root.instruments()
        assert [(n.uid, n.instrument_role) for n in leaves] == [
            ("drive0", "drive"), ("drive1", "drive"),
            ("acquire0", "acquire"), ("hub0", "hub")]
        subsystems = [c for c in root.children if not c.is_instrument]
        assert len(subsystems) == 1
        assert all(c.is_instrument for c in subsystems[0].children)

    def test_one_qubit_tree_has_three_leaves(self, mock1q):
        root, _ = mock1q
        assert [n.instrument_role for n in root.instruments()] == \
            ["drive", "acquire", "hub"]

    def test_pipelines_assigned_by_role(self, mock3q):
        root, _ = mock3q
        for node in root.instruments():
            assert node.pipeline, node.uid

    def test_duplicate_port_rejected(self):
        text = (DATA / "mock3q.cfg").read_text().replace(
            "ports q2_drive", "ports q0_drive")
        _, _, diags = load_target(text, str(DATA))
        assert any("more than one instrument" in d.message for d in diags)

    def test_missing_calibration_file(self):
        text = (DATA / "mock3q.cfg").read_text().replace(
            "mock3q_cals.qeir", "nope.qeir")
        root, cals, diags = load_target(text, str(DATA))
        assert root is None
        assert any(d.category is Category.CONFIG_ERROR for d in diags)

    def test_two_hubs_rejected(self):
        text = (DATA / "mock3q.cfg").read_text() + "instrument hub1 hub\n"
        _, _, diags = load_target(text, str(DATA))
        assert any("exactly one hub" in d.message for d in diags)

    def test_bad_lines_are_located(self):
        cfg, diags = parse_config("name x\nwhatisthis 3\n")
        assert any("line 2" in d.message for d in diags)

    def test_gate_map_parses_multi_qubit_entries(self):
        cfg, _ = parse_config("name x\ndt 1e-9\nqubits 2\ncalibration c\n"
                              "gate cx 0 1 -> cx_q0q1\n")
        assert cfg.gate_map[("cx", (0, 1))] == "cx_q0q1"

    def test_empty_calibration_waveform_rejected(self, tmp_path):
        cal_text = (DATA / "mock3q_cals.qeir").read_text()
        # shrink one waveform to zero samples
        import re
        broken = re.sub(r"samples = \[\[[^]]*\](?:, \[[^]]*\])*\]",
                        "samples = []", cal_text, count=1)
        (tmp_path / "cals.qeir").write_text(broken)
        cfg_text = (DATA / "mock3q.cfg").read_text().replace(
            "mock3q_cals.qeir", "cals.qeir")
        root, cals, diags = load_target(cfg_text, str(tmp_path))
        assert root is None
        assert any("empty waveform" in d.message for d in diags)


class TestEmission:
    def emitted(self, source, target):
        root, cals = target
        module = run_phase1(source, target)
        ctx = PassContext(calibrations=cals, target=root, dt=cals.dt)
        modules, diags = localize(module, ctx)
        assert not any(d.is_error for d in diags)
        out = {}
        for node in root.instruments():
            result = emit_instrument(modules[node.uid], node.instrument_role,
                                     cals.dt, {})
            assert not any(d.is_error for d in result.diagnostics), node.uid
            out[node.uid] = (modules[node.uid], result)
        return out

    def test_counting_oracle_every_instruction_maps_to_an_op(
            self, mock3q, corpus_program):
        for uid, (module, result) in self.emitted(corpus_program,
                                                  mock3q).items():
            census = opcode_census(result.binary)
            ops = sequence_expansion_counts(module)
            for opcode, names in COUNTED.items():
                expected = sum(ops.get(n, 0) for n in names)
                assert census.get(opcode, 0) == expected, (uid, opcode)

    def test_empty_drive_module_is_skeleton_only(self, mock3q):
        source = ("OPENQASM 3.0;\n"
                  "gate x q { U(3.14159265359, 0.0, 3.14159265359) q; }\n"
                  "qubit $0;\nx $0;\n")
        emitted = self.emitted(source, mock3q)
        _, result = emitted["drive1"]
        opcodes = [line.split(":", 1)[1].split()[0]
                   for line in result.binary.splitlines()[1:]]
        assert opcodes == ["INIT", "LOOP", "DELAY", "SHOT_INIT",
                           "END_LOOP", "FINI"]

    def test_drive_q2_play_count_matches_listing1(self, mock3q):
        emitted = self.emitted(read_corpus("listing1"), mock3q)
        module, result = emitted["drive1"]
        census = opcode_census(result.binary)
        plays = sequence_expansion_counts(module).get("pulse.play", 0)
        assert census.get("PLAY", 0) == plays > 0

    def test_waveforms_deduplicated_per_instrument(self, mock3q):
        emitted = self.emitted(read_corpus("listing1"), mock3q)
        module, result = emitted["drive0"]
        creates = []

        def walk(ops):
            for op in ops:
                if op.name == "pulse.create_waveform":
                    creates.append(op.attr("samples"))
                for region in op.regions:
                    for block in region.blocks:
                        walk(block.ops)

        walk(module.block.ops)
        distinct = {tuple(map(tuple, s)) for s in creates}
        assert len(result.waveforms) == len(distinct)
        assert len(creates) > len(distinct)  # dedup actually collapsed uses

    def test_parameter_feeds_patch_entry(self, mock3q):
        emitted = self.emitted(read_corpus("params"), mock3q)
        _, result = emitted["drive0"]
        assert result.patches, "expected PATCH sites on drive0"
        assert {site.symbol for site in result.patches} == {"theta"}
        for site in result.patches:
            line = result.binary.splitlines()[1 + site.line]
            assert line.split(":", 1)[1].split()[0] in ("SHIFT_PHASE",
                                                        "SET_PHASE")
        assert "PATCH theta" in result.binary

    def test_phase_encoding_is_millirad_half_away(self, mock3q):
        from qeforge.emitter import encode_phase
        assert encode_phase(3.14159265) == 3142
        assert encode_phase(-3.14159265) == -3142
        assert encode_phase(0.0005) == 1
        assert encode_phase(-0.0005) == -1

    def test_capture_on_drive_is_role_violation(self, mock3q):
        root, cals = mock3q
        module = run_phase1(read_corpus("bare"), mock3q)
        ctx = PassContext(calibrations=cals, target=root, dt=cals.dt)
        modules, _ = localize(module, ctx)
        result = emit_instrument(modules["acquire0"], "drive", cals.dt, {})
        assert any("UnsupportedOpForRole" in d.message
                   for d in result.diagnostics)

    def test_binary_is_utf8_lf_and_headed(self, mock3q, corpus_program):
        for uid, (_, result) in self.emitted(corpus_program, mock3q).items():
            assert result.binary.startswith("QEMOCK/1\n")
            assert "\r" not in result.binary
            result.binary.encode("utf-8")


class TestDiagnosticsCollection:
    def build_tree(self):
        leaves = [TargetNode("Instrument", f"i{k}", f"i{k}",
                             instrument_role="drive") for k in range(4)]
        root = TargetNode("System", "sys", "sys", children=leaves)
        return root, leaves

    def test_concurrent_appends_lose_nothing(self):
        root, leaves = self.build_tree()
        n_threads, per_thread = 8, 100

        def hammer(node, k):
            for i in range(per_thread):
                node.diagnostics.add(error(Category.INTERNAL_ERROR,
                                           f"{k}:{i}", None, "test"))

        threads = [threading.Thread(target=hammer, args=(leaves[k % 4], k))
                   for k in range(n_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(collect(root, [])) == n_threads * per_thread

    def test_collect_orders_by_preorder_not_completion(self):
        import random
        for seed in range(10):
            root, leaves = self.build_tree()
            fills = list(enumerate(leaves))
            random.Random(seed).shuffle(fills)
            for index, node in fills:  # shuffled completion order
                node.diagnostics.add(error(Category.INTERNAL_ERROR,
                                           f"node{index}", None, "t"))
            messages = [d.message for d in collect(root, [])]
            assert messages == ["node0", "node1", "node2", "node3"]

    def test_phase_diagnostics_come_first(self):
        root, leaves = self.build_tree()
        leaves[0].diagnostics.add(error(Category.INTERNAL_ERROR, "late",
                                        None, "t"))
        first = error(Category.QASM_PARSE_FAILURE, "early", None, "parse")
        assert [d.message for d in collect(root, [first])] == \
            ["early", "late"]

    def test_empty_collection(self):
        root, _ = self.build_tree()
        assert collect(root, []) == []
