import shutil
import subprocess

import pytest

from apimeter import elfsynth
from apimeter.catalog import extract_exported_symbols
from apimeter.errors import NoDynamicSymbolsError, NotElfError


def test_global_text_symbols_only(tmp_path):
    so = elfsynth.write_shared_object(
        tmp_path / "lib.so",
        [
            elfsynth.function("f"),
            elfsynth.local_function("g"),
            elfsynth.data_object("table"),
        ],
    )
    assert extract_exported_symbols(so) == {"f"}


def test_data_only_object_exports_nothing(tmp_path):
    so = elfsynth.write_shared_object(tmp_path / "lib.so", [elfsynth.data_object("table")])
    assert extract_exported_symbols(so) == set()


def test_weak_symbols_are_not_exported_text(tmp_path):
    so = elfsynth.write_shared_object(
        tmp_path / "lib.so", [elfsynth.function("f"), elfsynth.weak_function("w")]
    )
    assert extract_exported_symbols(so) == {"f"}


def test_versioned_names_normalized(tmp_path):
    so = elfsynth.write_shared_object(
        tmp_path / "lib.so", [elfsynth.function("tk_open@@TINYKV_1.0")]
    )
    assert extract_exported_symbols(so) == {"tk_open"}


def test_elf32_big_endian(tmp_path):
    so = elfsynth.write_shared_object(
        tmp_path / "lib.so",
        [elfsynth.function("f"), elfsynth.local_function("g")],
        bits=32,
        little_endian=False,
    )
    assert extract_exported_symbols(so) == {"f"}


def test_not_elf(tmp_path):
    bogus = tmp_path / "not_elf.so"
    bogus.write_bytes(b"MZ this is not an ELF file")
    with pytest.raises(NotElfError):
        extract_exported_symbols(bogus)


def test_truncated_elf(tmp_path):
    so = elfsynth.write_shared_object(tmp_path / "lib.so", [elfsynth.function("f")])
    (tmp_path / "cut.so").write_bytes(so.read_bytes()[:40])
    with pytest.raises(NotElfError):
        extract_exported_symbols(tmp_path / "cut.so")


def test_no_dynamic_symbols(tmp_path):
    # A bare ELF header with zero sections parses but has no .dynsym.
    so = elfsynth.write_shared_object(tmp_path / "lib.so", [elfsynth.function("f")])
    data = bytearray(so.read_bytes())
    # zero out e_shnum so no sections (hence no dynsym) are visible
    data[0x3C:0x3E] = b"\x00\x00"
    stripped = tmp_path / "stripped.so"
    stripped.write_bytes(bytes(data))
    with pytest.raises(NoDynamicSymbolsError):
        extract_exported_symbols(stripped)


TOOLCHAIN = shutil.which("gcc") and shutil.which("nm")


@pytest.mark.skipif(not TOOLCHAIN, reason="needs gcc and nm")
def test_cross_check_against_nm_on_compiled_library(tmp_path):
    # Independent oracle: compile a real shared object and compare against
    # the standard symbol-listing tool's " T " lines.
    src = tmp_path / "two.c"
    src.write_text(
        "int mdb_env_create(void) { return 1; }\n"
        "int mdb_env_open(void) { return 2; }\n"
        "static int helper(void) { return 3; }\n"
        "int lookup_table[4] = {1, 2, 3, 4};\n"
    )
    so = tmp_path / "libtwo.so"
    subprocess.run(["gcc", "-shared", "-fPIC", "-o", str(so), str(src)], check=True)

    nm = subprocess.run(["nm", "-CD", str(so)], check=True, capture_output=True, text=True)
    nm_text = {
        line.split()[-1].split("@")[0]
        for line in nm.stdout.splitlines()
        if " T " in line
    }
    assert extract_exported_symbols(so) == nm_text
    assert extract_exported_symbols(so) == {"mdb_env_create", "mdb_env_open"}


@pytest.mark.skipif(not shutil.which("nm"), reason="needs nm")
def test_nm_agrees_on_synthesized_object(tmp_path):
    so = elfsynth.write_shared_object(
        tmp_path / "lib.so",
        [
            elfsynth.function("alpha_fn"),
            elfsynth.function("beta_fn"),
            elfsynth.local_function("hidden"),
            elfsynth.data_object("blob"),
        ],
    )
    nm = subprocess.run(["nm", "-CD", str(so)], check=True, capture_output=True, text=True)
    nm_text = {line.split()[-1] for line in nm.stdout.splitlines() if " T " in line}
    assert extract_exported_symbols(so) == nm_text == {"alpha_fn", "beta_fn"}
