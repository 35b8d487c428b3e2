import numpy as np
import pytest

from varstep.data_io import (
    InfeasibleSpec,
    LibsvmFormatError,
    NoSeparableSubset,
    SyntheticSpec,
    generate_separable,
    load_libsvm,
    make_separable,
    scale_features,
    separabilize,
    write_libsvm,
)
from varstep.diagnostics import separability_check
from varstep.model import new_instance


def _write(tmp_path, text, name="d.libsvm"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_positive_row(tmp_path):
    inst = load_libsvm(_write(tmp_path, "+1 1:0.5 3:-2\n"))
    assert inst.n >= 3 and inst.is_sparse
    np.testing.assert_array_equal(inst.dense()[0, :3], [0.5, 0.0, -2.0])


def test_parse_negative_row_folds(tmp_path):
    inst = load_libsvm(_write(tmp_path, "-1 2:1\n+1 1:1\n"))
    np.testing.assert_array_equal(inst.dense()[0], [0.0, -1.0])


@pytest.mark.parametrize("labels, expect", [(("1", "2"), -1.0), (("1", "0"), -1.0)])
def test_alternate_label_sets(tmp_path, labels, expect):
    inst = load_libsvm(_write(tmp_path, f"{labels[0]} 1:1\n{labels[1]} 1:1\n"))
    assert inst.dense()[1, 0] == expect


def test_comments_and_blank_lines(tmp_path):
    inst = load_libsvm(_write(tmp_path, "# header\n\n+1 1:2 # trailing\n-1 2:1\n"))
    assert inst.m == 2 and inst.n == 2


def test_explicit_feature_count(tmp_path):
    assert load_libsvm(_write(tmp_path, "+1 1:1\n"), n_features=5).n == 5
    with pytest.raises(LibsvmFormatError):
        load_libsvm(_write(tmp_path, "+1 4:1\n"), n_features=2)


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("+1 1:1\n+1 2:1 1:3\n", 2),
        ("+1 1:1\n+1 0:1\n", 2),
        ("+1 1:1\nabc 1:1\n", 2),
        ("+1 1=1\n", 1),
        ("+1 1:x\n", 1),
        ("+1 1:nan\n", 1),
        ("+1 1:1\n3 1:1\n", 2),
    ],
)
def test_malformed_lines_report_line_number(tmp_path, text, lineno):
    with pytest.raises(LibsvmFormatError) as info:
        load_libsvm(_write(tmp_path, text))
    assert info.value.lineno == lineno


def test_empty_file(tmp_path):
    with pytest.raises(LibsvmFormatError):
        load_libsvm(_write(tmp_path, "# nothing\n"))


def test_round_trip(tmp_path):
    inst, _ = generate_separable(SyntheticSpec(m=30, n=4, margin=0.05, seed=2))
    path = tmp_path / "rt.libsvm"
    write_libsvm(inst, path)
    back = load_libsvm(path, n_features=4)
    np.testing.assert_array_equal(back.dense(), inst.dense())


def test_scale_features():
    inst = new_instance(np.array([[4.0, -0.5], [-2.0, 0.25]]), [1, 1])
    scaled = scale_features(inst)
    np.testing.assert_allclose(scaled.dense(), [[1.0, -1.0], [-0.5, 0.5]])


def test_generator_margin_and_determinism():
    spec = SyntheticSpec(m=10, n=2, margin=0.1, seed=7)
    inst, planted = generate_separable(spec)
    assert np.min(inst.matvec(planted)) >= 0.1
    inst2, planted2 = generate_separable(spec)
    np.testing.assert_array_equal(inst.dense(), inst2.dense())
    np.testing.assert_array_equal(planted, planted2)
    assert np.linalg.norm(planted) == pytest.approx(1.0)


def test_generator_sparsity():
    _, planted = generate_separable(SyntheticSpec(m=20, n=6, margin=0.1, seed=1, planted_sparsity=1))
    assert np.count_nonzero(planted) == 1


def test_generator_infeasible():
    with pytest.raises(InfeasibleSpec):
        generate_separable(SyntheticSpec(m=10, n=2, margin=5.0, seed=0))
    with pytest.raises(ValueError):
        SyntheticSpec(m=10, n=2, margin=0.1, planted_sparsity=3)


def test_separabilize_keeps_separable_data():
    inst, _ = generate_separable(SyntheticSpec(m=50, n=3, margin=0.2, seed=3))
    out, warm = separabilize(inst, 200)
    assert out is inst
    assert separability_check(inst, warm)[0]


def test_separabilize_drops_contradiction():
    X = np.array([[1.0, 0.5], [1.0, 0.5], [0.8, -0.2], [1.2, 0.1]])
    inst = new_instance(X, [1, -1, 1, 1])
    out = make_separable(inst, 100)
    assert out.m < inst.m


def test_separabilize_all_misclassified():
    # a row and its negation: neither margin can be positive
    inst = new_instance(np.array([[1.0], [-1.0]]), [1, 1])
    with pytest.raises(NoSeparableSubset):
        separabilize(inst, 10)
