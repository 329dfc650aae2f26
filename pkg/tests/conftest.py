import json
from pathlib import Path

import pytest

from apimeter import elfsynth
from apimeter.catalog import ApiCatalog, LibrarySpec, build_catalog

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"

GOLDEN_APIS = ["tk_open", "tk_close", "tk_put", "tk_get", "tk_delete", "tk_stat"]


def synth_golden_so(path: Path) -> Path:
    """The golden library's shared object: 6 APIs plus symbols that must be
    filtered out (internal export, local helper, data object)."""
    return elfsynth.write_shared_object(
        path,
        [elfsynth.function(n) for n in GOLDEN_APIS]
        + [
            elfsynth.function("tk_internal_bump"),
            elfsynth.local_function("tk_hash_mix"),
            elfsynth.data_object("tk_format_version"),
        ],
    )


@pytest.fixture(scope="session")
def golden_so(tmp_path_factory) -> Path:
    return synth_golden_so(tmp_path_factory.mktemp("golden_lib") / "libtinykv.so")


@pytest.fixture(scope="session")
def golden_spec(golden_so) -> LibrarySpec:
    return LibrarySpec(
        name="tinykv",
        shared_objects=(str(golden_so),),
        header_root=str(GOLDEN / "install" / "include"),
        source_roots=(str(GOLDEN / "libsrc"),),
        explicit_file_excludes=("tinykv_amalg.c",),
    )


@pytest.fixture(scope="session")
def golden_catalog(golden_spec) -> ApiCatalog:
    return build_catalog(golden_spec)


@pytest.fixture(scope="session")
def oracle() -> dict:
    return json.loads((GOLDEN / "oracle.json").read_text())


def make_catalog(names, library="lib") -> ApiCatalog:
    from apimeter.catalog import ApiSymbol

    return ApiCatalog(library=library, apis={n: ApiSymbol(name=n) for n in names})
