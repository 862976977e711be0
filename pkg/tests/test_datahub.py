import shutil

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from epinomic.datahub import (DatasetError, aggregate_patches, load_country_dataset, normalize_mobility,
                              packaged_dataset_path, technical_coefficients, validate_dataset, willingness,
                              write_country_dataset)


@pytest.mark.parametrize("country,G", [("BE", 11), ("SWE", 21)])
def test_packaged_shapes(country, G, request):
    ds = request.getfixturevalue(country.lower() if country == "BE" else "swe")
    assert ds.n_patches == G
    assert ds.n_sectors == 63
    assert ds.geo.population.shape == (17, G)
    assert ds.work_contacts.shape == (63, 17, 17)
    assert ds.sectors.lmc.shape == (G, 63)
    np.testing.assert_allclose(ds.sectors.lmc.sum(1), 1.0, atol=1e-6)


@pytest.mark.parametrize("country", ["BE", "SWE"])
def test_packaged_validate_clean(country):
    assert validate_dataset(packaged_dataset_path(country)) == []


def test_arrays_are_read_only(be):
    with pytest.raises(ValueError):
        be.geo.population[0, 0] = 1.0


def _corrupt(tmp_path, fn, transform):
    root = tmp_path / "BE"
    shutil.copytree(packaged_dataset_path("BE"), root)
    lines = (root / fn).read_text().splitlines()
    (root / fn).write_text("\n".join(transform(lines)) + "\n")
    return root


def _set_field(lines, row, col, value):
    parts = lines[row].split(",")
    parts[col] = value
    return lines[:row] + [",".join(parts)] + lines[row + 1:]


@pytest.mark.parametrize("fn,transform,message", [
    ("demography.csv", lambda L: _set_field(L, 1, 2, "-5"), "population must be positive"),
    ("demography.csv", lambda L: L[:-1], "dimension mismatch"),
    ("mobility.csv", lambda L: _set_field(L, 2, 2, "99999999"), "mobility row sum exceeds 1"),
    ("mobility.csv", lambda L: _set_field(L, 2, 2, "-1"), "negative commuter count"),
    ("contacts_home.csv", lambda L: _set_field(L, 2, 2, "9"), "reciprocity violated"),
    ("sectors.csv", lambda L: _set_field(L, 1, 7, "0.5"), "employee shares do not sum to 1"),
    ("sectors.csv", lambda L: _set_field(L, 1, 1, "0.99"), "f_workplace + f_telework exceeds 1"),
    ("io_vectors.csv", lambda L: _set_field(L, 1, 1, "99999"), "accounting identity"),
    ("criticality.csv", lambda L: _set_field(L, 1, 2, "0.7"), "criticality level must be 0, 0.5 or 1"),
    ("lmc.csv", lambda L: _set_field(L, 1, 2, "0.9"), "labour market composition must sum to 1"),
])
def test_corruption_is_named(tmp_path, fn, transform, message):
    root = _corrupt(tmp_path, fn, transform)
    problems = validate_dataset(root)
    assert len(problems) == 1
    assert fn in problems[0] or "contacts_home" in problems[0]
    assert message in problems[0]
    with pytest.raises(DatasetError):
        load_country_dataset(root)


def test_missing_file(tmp_path):
    root = tmp_path / "BE"
    shutil.copytree(packaged_dataset_path("BE"), root)
    (root / "io_z.csv").unlink()
    with pytest.raises(DatasetError, match="io_z.csv"):
        load_country_dataset(root)


def test_missing_directory(tmp_path):
    with pytest.raises(DatasetError, match="missing dataset directory"):
        load_country_dataset(tmp_path / "nowhere")


def test_normalize_mobility_trivial():
    P = np.array([[80.0, 20.0], [5.0, 45.0]])
    np.testing.assert_allclose(normalize_mobility(P, [100.0, 50.0]), [[0.8, 0.2], [0.1, 0.9]])
    with pytest.raises(ValueError):
        normalize_mobility(P, [0.0, 50.0])


def test_technical_coefficients_trivial():
    Z = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(technical_coefficients(Z, [10.0, 20.0]), [[0.1, 0.1], [0.3, 0.2]])


@settings(max_examples=50, deadline=None)
@given(arrays(float, 6, elements=st.floats(0.05, 1.0)), arrays(float, 6, elements=st.floats(0.05, 1.0)),
       arrays(float, 6, elements=st.floats(0.01, 1.0)))
def test_willingness_weighted_mean_is_one(fp, ft, share):
    share = share / share.sum()
    W = willingness(fp, ft, share)
    assert np.isclose((W * share).sum(), 1.0, rtol=1e-12)
    assert np.all(W >= 0)


def test_willingness_all_zero():
    with pytest.raises(ValueError):
        willingness(np.zeros(3), np.ones(3), np.ones(3) / 3)


def test_round_trip(tmp_path, fixture3):
    write_country_dataset(fixture3, tmp_path / "rt")
    back = load_country_dataset(tmp_path / "rt", name=fixture3.name)
    np.testing.assert_array_equal(back.geo.population, fixture3.geo.population)
    np.testing.assert_array_equal(back.io.Z, fixture3.io.Z)
    np.testing.assert_array_equal(back.mobility.normalized, fixture3.mobility.normalized)
    np.testing.assert_array_equal(back.work_contacts, fixture3.work_contacts)
    np.testing.assert_array_equal(back.sectors.criticality, fixture3.sectors.criticality)


def test_aggregate_patches_conserves(be):
    ids = be.geo.patch_ids
    red = aggregate_patches(be, [[ids[0]], list(ids[1:])], ids=["A", "B"])
    assert red.geo.patch_ids == ("A", "B")
    np.testing.assert_allclose(red.geo.population.sum(1), be.geo.population.sum(1), rtol=1e-12)
    assert np.isclose(red.mobility.raw.sum(), be.mobility.raw.sum(), rtol=1e-12)
    np.testing.assert_allclose(red.sectors.lmc.sum(1), 1.0, atol=1e-6)
    emp_full = (be.sectors.lmc * be.geo.active_population[:, None]).sum(0)
    emp_red = (red.sectors.lmc * red.geo.active_population[:, None]).sum(0)
    np.testing.assert_allclose(emp_red, emp_full, rtol=1e-6)


def test_aggregate_patches_requires_partition(be):
    with pytest.raises(ValueError, match="partition"):
        aggregate_patches(be, [[be.geo.patch_ids[0]]])


def test_normalize_mobility_examples():
    np.testing.assert_allclose(normalize_mobility([[80, 10], [5, 40]], [100, 50]), [[0.8, 0.1], [0.1, 0.8]])
    np.testing.assert_array_equal(normalize_mobility(np.zeros((2, 2)), [1, 1]), 0.0)
    np.testing.assert_allclose(technical_coefficients([[0, 10], [20, 0]], [100, 50]), [[0, 0.2], [0.2, 0]])
    np.testing.assert_array_equal(technical_coefficients(np.zeros((2, 2)), [1, 1]), 0.0)


def test_packaged_outbound_commuting_be(be):
    P = be.mobility.normalized
    out = P.sum(1) - np.diag(P)
    w = be.geo.active_population
    assert abs((out * w).sum() / w.sum() - 0.162) < 0.001


def test_packaged_population_be(be):
    assert be.geo.population.sum() == pytest.approx(11_431_000, rel=1e-3)


def test_packaged_column_sums_below_one(be, swe):
    assert swe.io.A.sum(0).max() < 1
    assert be.io.A.sum(0).max() < 1


def test_willingness_examples(be):
    np.testing.assert_allclose(willingness([0.5, 0.5], [0.4, 0.4], [0.5, 0.5]), 1.0)
    np.testing.assert_allclose(willingness([0.2, 0.4], [1.0, 1.0], [0.5, 0.5]), [2 / 3, 4 / 3])
    # tabulated 2.57; the curated employment shares reproduce it to within 1%
    assert be.sectors.willingness[be.sectors.index("P85")] == pytest.approx(2.57, rel=0.01)


def test_synthetic_fixture_accepted(fixture2):
    assert fixture2.n_patches == 2 and fixture2.n_sectors == 3
