import shutil

import pytest

from refpat import cli
from refpat.cli import EXIT_INCOMPATIBLE, EXIT_INPUT, EXIT_OK, main
from refpat.errors import IncompatiblePatternError
from refpat.io import read_mesh, write_mesh
from refpat.patterndb import BUNDLED_DIR, uniform_pattern
from refpat.reftools import is_conforming
from refpat.samples import kuhn_cube
from refpat.topology import ElementType

T = ElementType
TARGET = 9


@pytest.fixture
def cube_file(tmp_path):
    path = tmp_path / "cube.msh"
    path.write_text(write_mesh(kuhn_cube(TARGET)))
    return path


class TestValidate:
    def test_directional_tetrahedron(self, capsys):
        assert main(["validate-pattern", str(BUNDLED_DIR / "tetra_dir_1side.rpt")]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("father=Tetrahedron sons=2 side-patterns: 3 edges split")
        assert "permutations: 24" in out

    def test_uniform_quad(self, tmp_path, capsys):
        path = tmp_path / "q.rpt"
        path.write_text(uniform_pattern(T.QUADRILATERAL).serialize())
        assert main(["validate-pattern", str(path)]) == EXIT_OK
        assert "father=Quadrilateral sons=4" in capsys.readouterr().out

    def test_empty_file(self, tmp_path, capsys):
        path = tmp_path / "empty.rpt"
        path.write_text("")
        assert main(["validate-pattern", str(path)]) == EXIT_INPUT
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_file(self, tmp_path):
        assert main(["validate-pattern", str(tmp_path / "none.rpt")]) == EXIT_INPUT


class TestRefine:
    def test_one_directional_level(self, cube_file, tmp_path, capsys):
        out = tmp_path / "o.msh"
        vtk = tmp_path / "o.vtk"
        code = main(["refine", str(cube_file), "--target-mat", str(TARGET), "--levels", "1",
                     "--out", str(out), "--vtk", str(vtk)])
        assert code == EXIT_OK
        assert "hanging nodes: 0" in capsys.readouterr().out
        mesh = read_mesh(out.read_text())
        assert mesh.n_elements > 8 and is_conforming(mesh)
        assert vtk.read_text().startswith("# vtk DataFile")

    def test_zero_levels_is_identity(self, cube_file, tmp_path):
        out = tmp_path / "o.msh"
        assert main(["refine", str(cube_file), "--target-mat", str(TARGET), "--levels", "0",
                     "--out", str(out)]) == EXIT_OK
        assert out.read_text() == cube_file.read_text()

    def test_byte_identical_runs(self, cube_file, tmp_path):
        texts = []
        for k in range(2):
            out = tmp_path / f"o{k}.msh"
            main(["refine", str(cube_file), "--target-mat", str(TARGET), "--levels", "2",
                  "--out", str(out)])
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]

    def test_uniform_mode(self, cube_file, tmp_path, capsys):
        out = tmp_path / "o.msh"
        assert main(["refine", str(cube_file), "--mode", "uniform", "--levels", "1",
                     "--out", str(out)]) == EXIT_OK
        # six tetrahedra become 24 tets and 12 pyramids; the two triangles split in four
        assert read_mesh(out.read_text()).n_elements == 36 + 8
        assert "hanging nodes: 0" in capsys.readouterr().out

    def test_directional_needs_target(self, cube_file):
        assert main(["refine", str(cube_file)]) == EXIT_INPUT

    def test_missing_pattern_dir(self, cube_file, tmp_path, capsys):
        code = main(["refine", str(cube_file), "--target-mat", str(TARGET),
                     "--patterns", str(tmp_path / "nope")])
        assert code == EXIT_INPUT
        assert "does not exist" in capsys.readouterr().err

    def test_bad_mesh(self, tmp_path):
        path = tmp_path / "bad.msh"
        path.write_text("2 1\n0 0 0\n")
        assert main(["refine", str(path), "--target-mat", "1"]) == EXIT_INPUT

    def test_incompatibility_exit_code(self, cube_file, monkeypatch, capsys):
        def fail(*args, **kwargs):
            raise IncompatiblePatternError("conflicting neighbour", [])
        monkeypatch.setattr(cli, "refine_levels", fail)
        assert main(["refine", str(cube_file), "--target-mat", str(TARGET)]) == EXIT_INCOMPATIBLE
        assert "conflicting neighbour" in capsys.readouterr().err


class TestDbList:
    def test_bundled(self, capsys):
        assert main(["db-list"]) == EXIT_OK
        out = capsys.readouterr().out
        block = out.split("Tetrahedron (")[1].split("\nPyramid (")[0]
        assert "TetraDir1Side" in block
        assert "UniformTetrahedron" in block

    def test_empty_directory(self, tmp_path, capsys):
        assert main(["db-list", "--patterns", str(tmp_path)]) == EXIT_OK
        names = [line.split()[1] for line in capsys.readouterr().out.splitlines()
                 if line.startswith("  ")]
        assert names and all(n.startswith("Uniform") for n in names)

    def test_duplicate_files_listed_once(self, tmp_path, capsys):
        shutil.copy(BUNDLED_DIR / "tetra_dir_1side.rpt", tmp_path / "a.rpt")
        shutil.copy(BUNDLED_DIR / "tetra_dir_1side.rpt", tmp_path / "b.rpt")
        assert main(["db-list", "--patterns", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count(" TetraDir1Side ") == 1
