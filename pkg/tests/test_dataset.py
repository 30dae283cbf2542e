import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mp_viz import config
from mp_viz.dataset import (
    CandidateSet,
    OperatingPoint,
    load_candidates,
    load_embedding,
    pairwise_sq_distances,
    parse_operating_points,
    save_candidates,
    save_embedding,
    standardize,
    standardize_matrix,
)
from mp_viz.errors import (
    ConfigError,
    DuplicateId,
    InputError,
    MetadataError,
    MissingColumn,
    NonFiniteCell,
    NonNumericCell,
    ZeroVarianceColumn,
)
from mp_viz.provenance import sidecar_path


def write(tmp_path, text, name="cands.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_without_sidecar_treats_every_column_as_minimized_objective(tmp_path):
    path = write(tmp_path, "id,f1,f2\na,1,2\nb,3,4.5\nc,0,-1\n")
    cs = load_candidates(path)
    assert cs.ids == ("a", "b", "c")
    assert cs.column_names == ("f1", "f2")
    assert cs.senses == ("min", "min")
    np.testing.assert_array_equal(cs.objectives, [[1, 2], [3, 4.5], [0, -1]])
    assert cs.feasible.all()


def test_sidecar_declares_column_roles(tmp_path):
    path = write(tmp_path, "id,x,f1,f2,ok\na,0.1,1,2,true\nb,0.2,3,4,false\n")
    sidecar_path(path).write_text(
        "format = mp-csv-v1\n"
        "param_columns = x\n"
        "objective_columns = f2,f1\n"
        "senses = max,min\n"
        "feasible_column = ok\n"
    )
    cs = load_candidates(path)
    assert cs.param_names == ("x",)
    assert cs.column_names == ("f2", "f1")
    assert cs.senses == ("max", "min")
    np.testing.assert_array_equal(cs.column("x"), [0.1, 0.2])
    np.testing.assert_array_equal(cs.feasible, [True, False])


def test_bad_sidecar_is_metadata_error(tmp_path):
    path = write(tmp_path, "id,f1\na,1\nb,2\n")
    sidecar_path(path).write_text("format = mp-csv-v1\nobjective_columns = f1\nsenses = up\n")
    with pytest.raises(MetadataError, match="senses"):
        load_candidates(path)


def test_missing_id_column(tmp_path):
    path = write(tmp_path, "name,f1\na,1\nb,2\n")
    with pytest.raises(MissingColumn, match="'id'"):
        load_candidates(path)


def test_duplicate_id_names_the_row(tmp_path):
    path = write(tmp_path, "id,f1\na,1\nb,2\na,3\n")
    with pytest.raises(DuplicateId) as excinfo:
        load_candidates(path)
    assert excinfo.value.candidate_id == "a"
    assert excinfo.value.row == 3


def test_non_numeric_cell_names_row_and_column(tmp_path):
    path = write(tmp_path, "id,f1,f2\na,1,2\nb,3,four\n")
    with pytest.raises(NonNumericCell) as excinfo:
        load_candidates(path)
    assert (excinfo.value.row, excinfo.value.column, excinfo.value.value) == (2, "f2", "four")


@pytest.mark.parametrize("cell", ["nan", "inf", "-inf"])
def test_non_finite_cells_are_rejected(tmp_path, cell):
    path = write(tmp_path, f"id,f1\na,1\nb,{cell}\n")
    with pytest.raises(NonFiniteCell):
        load_candidates(path)


def test_empty_and_single_row_files(tmp_path):
    with pytest.raises(InputError):
        load_candidates(write(tmp_path, "", "empty.csv"))
    with pytest.raises(InputError, match="at least 2"):
        load_candidates(write(tmp_path, "id,f1\na,1\n", "one.csv"))
    with pytest.raises(InputError, match="not found"):
        load_candidates(tmp_path / "absent.csv")


def test_row_limit_is_env_tunable(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "MAX_CANDIDATES", 3)
    path = write(tmp_path, "id,f1\na,1\nb,2\nc,3\nd,4\n")
    with pytest.raises(InputError, match="MP_MAX_CANDIDATES"):
        load_candidates(path)


def test_saved_table_loads_back_identical(tmp_path):
    ops = (OperatingPoint("A", 0.18, 2000.0, 3.0), OperatingPoint("B", 0.08, 5000.0, 2.0))
    cs = CandidateSet(
        ids=("g000-0000", "g000-0001", "g001-0000"),
        objectives=np.array([[0.1, 0.2, 0.3], [1 / 3, 2 / 3, 1e-9], [5.0, 6.0, 7.0]]),
        column_names=("A.torque", "B.torque", "volume"),
        params=np.array([[0.5], [0.25], [1 / 7]]),
        param_names=("bore_diameter",),
        senses=("max", "max", "min"),
        operating_points=ops,
        objectives_per_point=1,
        global_objectives=1,
        feasible=np.array([True, False, True]),
    )
    path = save_candidates(cs, tmp_path / "cands.csv")
    assert load_candidates(path) == cs


def test_candidate_arrays_are_read_only(small_candidates):
    with pytest.raises(ValueError):
        small_candidates.objectives[0, 0] = 99.0


def test_subset_by_mask_and_indices(small_candidates):
    by_index = small_candidates.subset([4, 1])
    assert by_index.ids == ("c4", "c1")
    mask = np.array([True, False, True, False, False, False])
    assert small_candidates.subset(mask).ids == ("c0", "c2")
    with pytest.raises(MissingColumn):
        small_candidates.column("efficiency")


def test_objective_count_must_match_operating_point_layout():
    with pytest.raises(MetadataError, match="declares"):
        CandidateSet(
            ids=("a", "b"),
            objectives=np.zeros((2, 3)),
            column_names=("f1", "f2", "f3"),
            operating_points=(OperatingPoint("A", 1.0, 1.0, 1.0),),
            objectives_per_point=4,
        )


def test_operating_point_parsing():
    ops = parse_operating_points("A:0.18:2000:3;B:0.08:5000:2")
    assert [op.label for op in ops] == ["A", "B"]
    assert ops[1].speed == 5000.0
    with pytest.raises(MetadataError):
        parse_operating_points("A:0.18:2000")
    with pytest.raises(ConfigError):
        OperatingPoint("A", -1.0, 2000.0, 3.0)


def test_zscore_has_zero_mean_unit_std(rng):
    X = rng.normal(5.0, 3.0, size=(50, 4))
    Z = standardize_matrix(X, "zscore")
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)


def test_zscore_rejects_constant_column():
    X = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
    with pytest.raises(ZeroVarianceColumn) as excinfo:
        standardize_matrix(X, "zscore", ("f1", "f2"))
    assert excinfo.value.column == "f2"


def test_minmax_maps_constant_column_to_zero():
    X = np.column_stack([np.array([1.0, 3.0, 2.0]), np.full(3, 7.0)])
    np.testing.assert_array_equal(standardize_matrix(X, "minmax"), [[0, 0], [1, 0], [0.5, 0]])


def test_standardize_only_touches_objectives(small_candidates):
    scaled = standardize(small_candidates, "minmax")
    assert scaled.ids == small_candidates.ids
    assert scaled.objectives.min() == 0.0 and scaled.objectives.max() == 1.0
    assert standardize(small_candidates, "none") is small_candidates
    with pytest.raises(ConfigError):
        standardize(small_candidates, "robust")


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, (12, 3), elements=st.floats(-1e3, 1e3, allow_nan=False)),
    st.sampled_from(["zscore", "minmax"]),
)
def test_standardize_is_idempotent(X, mode):
    X = X + np.linspace(0.0, 1e4, 12)[:, None]  # trend outweighs the noise: no constant column
    once = standardize_matrix(X, mode)
    np.testing.assert_allclose(standardize_matrix(once, mode), once, atol=1e-9)


def test_pairwise_distances_match_brute_force(rng):
    X = rng.normal(size=(9, 5))
    D = pairwise_sq_distances(X).values
    for i in range(9):
        for j in range(9):
            assert D[i, j] == pytest.approx(sum((X[i] - X[j]) ** 2), abs=1e-12)
    assert np.array_equal(D, D.T)
    assert not np.diag(D).any()


def test_embedding_file_keeps_method_and_unembedded_ids(tmp_path):
    coords = np.array([[0.5, -1.25], [1e-3, 2.0]])
    path = save_embedding(tmp_path / "map.csv", ("a", "b"), coords, "isomap", ("c",))
    emb = load_embedding(path)
    assert emb.ids == ("a", "b")
    assert emb.method == "isomap"
    assert emb.unembedded == ("c",)
    np.testing.assert_array_equal(emb.coords, coords)
    assert path.read_text().splitlines()[0] == "id,y1,y2"


def test_embedding_file_needs_y_columns(tmp_path):
    path = write(tmp_path, "id,x,y\na,1,2\nb,3,4\n", "map.csv")
    with pytest.raises(MetadataError, match="id,y1..yd"):
        load_embedding(path)
