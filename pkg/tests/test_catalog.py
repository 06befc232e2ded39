import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from climalab.catalog import (
    Catalog,
    CatalogQuery,
    DatasetDescriptor,
    EmptyQuery,
    InvariantViolation,
    MissingFile,
    ParseError,
    load_catalog,
)
from climalab.fixtures.catalogdata import catalog_rows, write_catalog


@pytest.fixture(scope="module")
def catalog(tmp_path_factory):
    home = tmp_path_factory.mktemp("cat")
    path = write_catalog(home / "catalog.jsonl")
    return load_catalog(path, data_root=home / "data")


def test_fixture_catalog_loads_with_zero_rejects(catalog):
    assert len(catalog) == 64


def test_exact_facet_query_matches_linear_scan(catalog):
    q = CatalogQuery(experiment="historical", variable="tas")
    hits = catalog.query_datasets(q)
    oracle = [
        d for d in catalog.all()
        if d.experiment == "historical" and d.variable == "tas"
    ]
    assert hits == oracle
    assert len(hits) == 10  # 5 models x 2 frequencies


def test_ordering_is_experiment_model_member(catalog):
    hits = catalog.query_datasets(CatalogQuery(variable="tas", frequency="monthly"))
    keys = [(d.experiment, d.source_model, d.ensemble_member) for d in hits]
    assert keys == sorted(keys)


def test_no_facets_raises_empty_query(catalog):
    with pytest.raises(EmptyQuery):
        catalog.query_datasets(CatalogQuery())


def test_unknown_value_yields_empty_list_not_error(catalog):
    assert catalog.query_datasets(CatalogQuery(variable="zooplankton")) == []


def test_limit_truncates(catalog):
    hits = catalog.query_datasets(CatalogQuery(activity="CMIP", limit=3))
    assert len(hits) == 3


def test_limit_must_be_positive():
    with pytest.raises(ValueError):
        CatalogQuery(variable="tas", limit=0)


def test_obs_products_present(catalog):
    obs = catalog.query_datasets(CatalogQuery(activity="obs"))
    assert {d.source_model for d in obs} == {"HadCRUT5", "ERA5", "GPCP-SG", "HadISST"}


class TestLoadDiagnostics:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_catalog(tmp_path / "absent.jsonl")

    def test_bad_json_names_row(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps(catalog_rows()[0]) + "\nnot json\n")
        with pytest.raises(ParseError) as exc:
            load_catalog(p)
        assert exc.value.details.get("row") == 2 or "row 2" in str(exc.value)

    def test_reversed_time_range_rejected(self, tmp_path):
        row = catalog_rows()[0]
        row["time_range"] = [2014, 1985]
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps(row) + "\n")
        with pytest.raises(InvariantViolation):
            load_catalog(p)

    def test_unknown_frequency_rejected(self, tmp_path):
        row = catalog_rows()[0]
        row["frequency"] = "hourly"
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps(row) + "\n")
        with pytest.raises(InvariantViolation):
            load_catalog(p)

    def test_missing_field_rejected(self, tmp_path):
        row = catalog_rows()[0]
        del row["units"]
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps(row) + "\n")
        with pytest.raises(InvariantViolation):
            load_catalog(p)


class TestResolution:
    def test_resolves_existing_file(self, tmp_path):
        path = write_catalog(tmp_path / "catalog.jsonl")
        cat = load_catalog(path, data_root=tmp_path / "data")
        d = cat.all()[0]
        target = tmp_path / "data" / d.uri
        target.parent.mkdir(parents=True)
        target.write_text("{}")
        resolved = cat.resolve_descriptor(d)
        assert resolved == target.resolve()

    def test_absent_file_raises(self, catalog):
        with pytest.raises(MissingFile):
            catalog.resolve_descriptor(catalog.all()[0])

    def test_escape_attempt_raises(self, tmp_path):
        path = write_catalog(tmp_path / "catalog.jsonl")
        cat = load_catalog(path, data_root=tmp_path / "data")
        d = cat.all()[0]
        evil = DatasetDescriptor(**{**d.to_dict(), "uri": "../../etc/passwd",
                                    "time_range": d.time_range})
        with pytest.raises(MissingFile):
            cat.resolve_descriptor(evil)


_facet_values = {
    "activity": st.sampled_from(["CMIP", "ScenarioMIP", "obs", "DAMIP"]),
    "experiment": st.sampled_from(["historical", "piControl", "ssp245", "observations"]),
    "source_model": st.sampled_from(
        ["ACCESS-CM2", "CanESM5", "MIROC6", "MPI-ESM1-2-LR", "NorESM2-LM", "HadCRUT5"]
    ),
    "variable": st.sampled_from(["tas", "pr", "tos", "psl"]),
    "frequency": st.sampled_from(["monthly", "annual"]),
}


@settings(max_examples=100)
@given(
    st.dictionaries(
        st.sampled_from(sorted(_facet_values)),
        st.none(),
        min_size=1,
        max_size=3,
    ).flatmap(
        lambda keys: st.fixed_dictionaries({k: _facet_values[k] for k in keys})
    )
)
def test_query_equals_brute_force_filter(facets):
    rows = catalog_rows()
    cat = Catalog([DatasetDescriptor(**r) for r in rows], data_root="/tmp")
    hits = cat.query_datasets(CatalogQuery(**facets))
    oracle = [
        d for d in cat.all()
        if all(getattr(d, k) == v for k, v in facets.items())
    ]
    assert hits == oracle
