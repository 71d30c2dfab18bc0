import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracmorrey.corpus import (
    COMPACT_FAMILIES,
    FAMILIES,
    CorpusError,
    CorpusSpec,
    cutoff,
    generate,
    smooth_step,
    write_corpus,
)
from fracmorrey.grid import GridSpec
from fracmorrey.mgf import read_grid
from fracmorrey.norms import MorreyParams, morrey_norm


@pytest.fixture(scope="module")
def grid1():
    return GridSpec(1, 256, 16.0)


class TestSpec:
    def test_unknown_family(self, grid1):
        with pytest.raises(CorpusError, match="unknown"):
            CorpusSpec(1, ("gaussian", "sawtooth"), 1, grid1)

    def test_negative_count(self, grid1):
        with pytest.raises(CorpusError):
            CorpusSpec(1, ("gaussian",), -1, grid1)

    def test_default_rho(self, grid1):
        assert CorpusSpec(1, ("power",), 1, grid1).rho == pytest.approx(2 * grid1.h)
        assert CorpusSpec(1, ("power",), 1, grid1, rho_reg=0.3).rho == 0.3

    def test_zero_count(self, grid1):
        assert generate(CorpusSpec(1, FAMILIES, 0, grid1)) == []


class TestDeterminism:
    @pytest.mark.parametrize("n,N", [(1, 128), (2, 32)])
    def test_bit_identical(self, n, N):
        cs = CorpusSpec(11, FAMILIES, 2, GridSpec(n, N, 8.0))
        a, b = generate(cs), generate(cs)
        assert [t.id for t in a] == [t.id for t in b]
        for x, y in zip(a, b):
            assert x.function.values.tobytes() == y.function.values.tobytes()
            assert x.manifest() == y.manifest()

    def test_member_independent_of_others(self, grid1):
        alone = generate(CorpusSpec(5, ("loglog",), 3, grid1))
        mixed = generate(CorpusSpec(5, ("gaussian", "loglog"), 3, grid1))
        np.testing.assert_array_equal(alone[2].function.values, mixed[5].function.values)

    def test_seed_changes_output(self, grid1):
        a = generate(CorpusSpec(1, ("gaussian",), 2, grid1))[1]
        b = generate(CorpusSpec(2, ("gaussian",), 2, grid1))[1]
        assert not np.array_equal(a.function.values, b.function.values)

    def test_resample_matches_generation_on_refined_grid(self, grid1):
        cs = CorpusSpec(3, ("ball", "trig"), 1, grid1)
        fine = grid1.refined()
        for a, b in zip(generate(cs), generate(cs.on_grid(fine))):
            np.testing.assert_array_equal(a.resample(fine).values, b.function.values)


class TestFamilies:
    @pytest.mark.parametrize("n,N", [(1, 512), (2, 64)])
    def test_compact_families_vanish_on_band(self, n, N):
        for tf in generate(CorpusSpec(9, COMPACT_FAMILIES, 4, GridSpec(n, N, 16.0))):
            assert tf.function.support_tag == "compact"
            assert tf.function.band_violation() <= 1e-12, tf.id

    def test_potentials_nonnegative(self):
        for n, N in [(1, 256), (2, 32)]:
            for tf in generate(CorpusSpec(4, ("potential",), 5, GridSpec(n, N, 8.0))):
                assert np.min(tf.function.values) >= 0.25 - 1e-12

    def test_coefficient_bounds(self):
        for tf in generate(CorpusSpec(4, ("coefficient",), 5, GridSpec(2, 32, 8.0))):
            v = tf.function.values
            assert np.all(v > 0.5) and np.all(v < 2.0)

    def test_trig_is_periodic(self, grid1):
        tf = generate(CorpusSpec(2, ("trig",), 1, grid1))[0]
        x = grid1.axis()
        np.testing.assert_allclose(tf.rule(x), tf.rule(x + grid1.L), atol=1e-12)

    def test_first_singular_member_at_origin(self, grid1):
        for fam in ("power", "loglog"):
            tf = generate(CorpusSpec(2, (fam,), 2, grid1))[0]
            assert tf.singular_points == ((0.0,),)
            assert tf.function.values[grid1.N // 2] == np.max(np.abs(tf.function.values))

    def test_power_clip_level(self, grid1):
        cs = CorpusSpec(2, ("power",), 1, grid1)
        tf = generate(cs)[0]
        assert np.max(tf.function.values) == pytest.approx(cs.rho ** -0.5)

    def test_mean_zero_gaussian(self):
        s = GridSpec(1, 1024, 16.0)
        for tf in generate(CorpusSpec(3, ("gaussian",), 3, s, options={"mean_zero": True})):
            v = tf.function.values
            assert abs(v.sum() * s.h) <= 1e-6 * np.abs(v).sum() * s.h

    def test_smooth_step_and_cutoff(self):
        s = np.linspace(-1, 2, 301)
        y = smooth_step(s)
        assert np.all(np.diff(y) >= 0) and y[0] == 0 and y[-1] == 1
        np.testing.assert_allclose(smooth_step(0.5), 0.5)
        assert cutoff(np.array([0.0, 0.6, 1.0, 1.2]), 1.0).tolist() == [1.0, 1.0, 0.0, 0.0]

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 1.0))
    def test_smooth_step_symmetry(self, s):
        assert smooth_step(s) + smooth_step(1 - s) == pytest.approx(1.0)

    def test_power_morrey_norm_refinement_stable(self):
        morrey = []
        for N in (512, 1024, 2048):
            s = GridSpec(1, N, 16.0)
            tf = generate(CorpusSpec(7, ("power",), 1, s))[0]
            morrey.append(morrey_norm(tf.function, MorreyParams(1.0, 0.5)).value)
        assert max(morrey) / min(morrey) - 1 <= 0.10


class TestManifest:
    def test_roundtrip(self, tmp_path):
        s = GridSpec(1, 64, 8.0)
        cs = CorpusSpec(8, ("gaussian", "power", "potential"), 2, s)
        funcs = generate(cs)
        path = write_corpus(funcs, cs, tmp_path / "corpus")
        man = json.loads(path.read_text())
        assert man["seed"] == 8 and man["count"] == 2 and man["rho_reg"] == pytest.approx(cs.rho)
        assert [e["id"] for e in man["functions"]] == [t.id for t in funcs]
        for entry, tf in zip(man["functions"], funcs):
            back = read_grid(path.parent / entry["file"])
            np.testing.assert_array_equal(back.values, tf.function.values)
            assert back.support_tag == tf.function.support_tag
            assert entry["memberships"] == list(tf.memberships)

    def test_manifest_is_json_clean(self):
        for tf in generate(CorpusSpec(8, FAMILIES, 1, GridSpec(2, 16, 8.0))):
            json.dumps(tf.manifest(), allow_nan=False)
