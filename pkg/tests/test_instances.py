import json
import pathlib

import numpy as np
import pytest

from gapbound.errors import InstanceParseError
from gapbound.gap import regularized_gap
from gapbound.instances import (
    dump_instance,
    instance_from_json,
    instance_from_string,
    instance_to_json,
    instance_to_string,
    load_instance,
    polynomial_from_json,
    polynomial_to_json,
    write_atomic,
)
from gapbound.poly import Polynomial

from _common import halfline_instance, orthant_shift_instance, planar_instance

INSTANCE_DIR = pathlib.Path(__file__).resolve().parent.parent / "instances"


class TestPolynomialWire:
    def test_round_trip_normalizes(self):
        obj = {"n_vars": 2, "terms": [
            {"c": 1.0, "e": [1, 1]},
            {"c": 2.0, "e": [0, 0]},
            {"c": -1.0, "e": [1, 1]},
        ]}
        p = polynomial_from_json(obj)
        assert p == Polynomial(2, ((2.0, (0, 0)),))
        assert polynomial_from_json(polynomial_to_json(p)) == p

    def test_unknown_key_rejected(self):
        with pytest.raises(InstanceParseError, match="unknown keys"):
            polynomial_from_json({"n_vars": 1, "terms": [], "extra": 1})

    def test_boolean_is_not_a_number(self):
        with pytest.raises(InstanceParseError):
            polynomial_from_json({"n_vars": 1, "terms": [{"c": True, "e": [1]}]})

    def test_wrong_arity_rejected(self):
        with pytest.raises(InstanceParseError):
            polynomial_from_json({"n_vars": 2, "terms": [{"c": 1.0, "e": [1]}]})

    def test_negative_exponent_rejected(self):
        with pytest.raises(InstanceParseError):
            polynomial_from_json({"n_vars": 1, "terms": [{"c": 1.0, "e": [-1]}]})


class TestInstanceWire:
    @pytest.mark.parametrize("inst_builder", [
        halfline_instance, planar_instance,
        lambda: orthant_shift_instance(a=(0.5, -2.0), rho=3.0)])
    def test_round_trip_semantically_identical(self, inst_builder):
        inst = inst_builder()
        again = instance_from_string(instance_to_string(inst))
        assert again.F.components == inst.F.components
        assert again.omega.ineqs == inst.omega.ineqs
        assert again.omega.eqs == inst.omega.eqs
        assert again.omega.declared_convex == inst.omega.declared_convex
        assert again.rho == inst.rho
        third = instance_from_string(instance_to_string(again))
        assert instance_to_json(third) == instance_to_json(again)

    def test_malformed_json_carries_position(self):
        with pytest.raises(InstanceParseError) as info:
            instance_from_string('{"F": [\n  {"n_vars": 1 "terms": []}]}')
        assert info.value.line == 2
        assert info.value.column is not None

    def test_rho_defaults_to_one(self):
        inst = instance_from_json({
            "F": [{"n_vars": 1, "terms": [{"c": 1.0, "e": [1]}]}],
            "omega": {}})
        assert inst.rho == 1.0
        assert inst.omega.is_free

    def test_rho_must_be_positive(self):
        with pytest.raises(InstanceParseError):
            instance_from_json({
                "F": [{"n_vars": 1, "terms": [{"c": 1.0, "e": [1]}]}],
                "omega": {}, "rho": -1.0})

    def test_mixed_arity_components_rejected(self):
        with pytest.raises(InstanceParseError):
            instance_from_json({
                "F": [{"n_vars": 1, "terms": [{"c": 1.0, "e": [1]}]},
                      {"n_vars": 2, "terms": [{"c": 1.0, "e": [1, 0]}]}],
                "omega": {}})

    def test_non_square_map_rejected(self):
        with pytest.raises(InstanceParseError):
            instance_from_json({
                "F": [{"n_vars": 2, "terms": [{"c": 1.0, "e": [1, 0]}]}],
                "omega": {}})

    def test_box_parsed(self):
        inst = instance_from_json({
            "F": [{"n_vars": 1, "terms": [{"c": 1.0, "e": [1]}]}],
            "omega": {"box": {"lo": [-1.0], "hi": [1.0]}}})
        lo, hi = inst.omega.bounding_box
        assert lo[0] == -1.0 and hi[0] == 1.0

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(InstanceParseError, match="unknown keys"):
            instance_from_json({
                "F": [{"n_vars": 1, "terms": [{"c": 1.0, "e": [1]}]}],
                "omega": {}, "banana": 1})


class TestFiles:
    def test_load_dump_load(self, tmp_path):
        inst = load_instance(str(INSTANCE_DIR / "halfline_identity.json"))
        out = tmp_path / "copy.json"
        dump_instance(inst, str(out))
        again = load_instance(str(out))
        assert instance_to_json(again) == instance_to_json(inst)

    def test_missing_file_is_parse_error(self):
        with pytest.raises(InstanceParseError):
            load_instance("/nonexistent/gapbound-instance.json")

    def test_write_atomic_replaces(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old")
        write_atomic(str(target), "new")
        assert target.read_text() == "new"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


class TestBundledInstances:
    def test_bilinear_plane_matches_builder(self):
        inst = load_instance(str(INSTANCE_DIR / "bilinear_plane.json"))
        want = planar_instance()
        assert inst.F.components == want.F.components
        assert inst.omega.is_free
        assert regularized_gap(inst, [1.0, 1.0]) == 0.0
        assert regularized_gap(inst, [2.0, 0.5]) == pytest.approx(0.125, abs=1e-15)

    def test_halfline_matches_builder(self):
        inst = load_instance(str(INSTANCE_DIR / "halfline_identity.json"))
        want = halfline_instance()
        assert inst.F.components == want.F.components
        assert inst.omega.ineqs == want.omega.ineqs
        assert inst.omega.declared_convex

    def test_orthant_shift_solution(self):
        inst = load_instance(str(INSTANCE_DIR / "orthant_shift.json"))
        # F(x) = x - (1, -1): the complementarity solution is (1, 0)
        assert regularized_gap(inst, [1.0, 0.0]) <= 1e-15
        assert inst.omega.contains(np.array([0.0, 0.0]))

    def test_bundled_files_are_valid_json(self):
        for path in INSTANCE_DIR.glob("*.json"):
            json.loads(path.read_text())
            load_instance(str(path))
