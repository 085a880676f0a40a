import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from mixsel.core.failures import BAD_MAGIC, DIM_MISMATCH, EMPTY_INPUT, NAN_FOUND, MixselError
from mixsel.harness.embeddings import HEADER_DTYPE, MAGIC, load_embeddings, write_embeddings


def _header(count: int, dim: int, magic: bytes = MAGIC, version: int = 1) -> bytes:
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = magic
    header["version"] = version
    header["count"] = count
    header["dim"] = dim
    return header.tobytes()


class BinaryEmbeddingTest(unittest.TestCase):
    def test_round_trip_is_bitwise_at_float32(self) -> None:
        values = np.random.default_rng(0).standard_normal((100, 8)).astype(np.float32)
        with TemporaryDirectory() as tmpdir:
            path = write_embeddings(Path(tmpdir) / "arm.mxe", values)
            self.assertEqual(path.stat().st_size, 20 + 100 * 8 * 4)
            loaded = load_embeddings(path)
        self.assertEqual(loaded.dtype, np.float64)
        np.testing.assert_array_equal(loaded.astype(np.float32), values)

    def test_header_layout(self) -> None:
        with TemporaryDirectory() as tmpdir:
            path = write_embeddings(Path(tmpdir) / "a.mxe", np.ones((3, 2)))
            raw = path.read_bytes()
        self.assertEqual(raw[:4], b"MXE1")
        self.assertEqual(int.from_bytes(raw[4:8], "little"), 1)
        self.assertEqual(int.from_bytes(raw[8:16], "little"), 3)
        self.assertEqual(int.from_bytes(raw[16:20], "little"), 2)

    def test_zero_count_is_empty(self) -> None:
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "empty.mxe"
            path.write_bytes(_header(0, 4))
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(path)
        self.assertEqual(ctx.exception.code, EMPTY_INPUT)

    def test_bad_magic_names_offset(self) -> None:
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "bad.mxe"
            path.write_bytes(_header(1, 1, magic=b"NOPE") + np.zeros(1, dtype="<f4").tobytes())
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(path)
            short = Path(tmpdir) / "short.mxe"
            short.write_bytes(b"MX")
            with self.assertRaises(MixselError) as short_ctx:
                load_embeddings(short)
        self.assertEqual(ctx.exception.code, BAD_MAGIC)
        self.assertIn("byte offset 0", ctx.exception.detail)
        self.assertEqual(short_ctx.exception.code, BAD_MAGIC)

    def test_length_mismatch(self) -> None:
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "trunc.mxe"
            path.write_bytes(_header(4, 2) + np.zeros(7, dtype="<f4").tobytes())
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(path)
        self.assertEqual(ctx.exception.code, DIM_MISMATCH)

    def test_nan_reports_row_and_offset(self) -> None:
        values = np.zeros((5, 3), dtype="<f4")
        values[2, 1] = np.nan
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "nan.mxe"
            path.write_bytes(_header(5, 3) + values.tobytes())
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(path)
        self.assertEqual(ctx.exception.code, NAN_FOUND)
        self.assertIn("row 2", ctx.exception.detail)
        self.assertIn(f"byte offset {20 + 2 * 3 * 4}", ctx.exception.detail)

    def test_missing_file(self) -> None:
        with TemporaryDirectory() as tmpdir:
            with self.assertRaises(FileNotFoundError):
                load_embeddings(Path(tmpdir) / "absent.mxe")


class CsvEmbeddingTest(unittest.TestCase):
    def test_keeps_float64_precision(self) -> None:
        values = np.random.default_rng(1).standard_normal((10, 3))
        with TemporaryDirectory() as tmpdir:
            from_csv = load_embeddings(write_embeddings(Path(tmpdir) / "a.csv", values))
            from_binary = load_embeddings(write_embeddings(Path(tmpdir) / "a.mxe", values))
        self.assertEqual(from_csv.dtype, np.float64)
        np.testing.assert_array_equal(from_csv, values)
        np.testing.assert_array_equal(from_binary, values.astype(np.float32).astype(np.float64))

    def test_nan_row_is_named(self) -> None:
        lines = [f"{i}.0,{i}.5" for i in range(10)]
        lines[7] = "7.0,nan"
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "nan.csv"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(path)
        self.assertEqual(ctx.exception.code, NAN_FOUND)
        self.assertIn("row 7", ctx.exception.detail)

    def test_nan_row_counts_blank_lines(self) -> None:
        lines = [f"{i}.0,{i}.5" for i in range(10)]
        lines[2] = ""
        lines[7] = "7.0,nan"
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "gaps.csv"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(path)
        self.assertEqual(ctx.exception.code, NAN_FOUND)
        self.assertIn("row 7 (line 8)", ctx.exception.detail)

    def test_ragged_and_empty_files(self) -> None:
        with TemporaryDirectory() as tmpdir:
            ragged = Path(tmpdir) / "ragged.csv"
            ragged.write_text("1,2\n3\n", encoding="utf-8")
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(ragged)
            self.assertEqual(ctx.exception.code, DIM_MISMATCH)
            empty = Path(tmpdir) / "empty.csv"
            empty.write_text("\n", encoding="utf-8")
            with self.assertRaises(MixselError) as ctx:
                load_embeddings(empty)
            self.assertEqual(ctx.exception.code, EMPTY_INPUT)


class WriteEmbeddingTest(unittest.TestCase):
    def test_rejects_bad_arrays(self) -> None:
        with TemporaryDirectory() as tmpdir:
            target = Path(tmpdir) / "x.mxe"
            for bad, code in ((np.zeros(3), DIM_MISMATCH), (np.zeros((0, 2)), EMPTY_INPUT), (np.full((1, 2), np.inf), NAN_FOUND)):
                with self.subTest(code=code):
                    with self.assertRaises(MixselError) as ctx:
                        write_embeddings(target, bad)
                    self.assertEqual(ctx.exception.code, code)
            self.assertFalse(target.exists())


if __name__ == "__main__":
    unittest.main()
