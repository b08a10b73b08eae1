"""Tests for the binary parameter file format."""
import struct
from collections import OrderedDict

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from app.autodiff.serialization import (
    PARAMS_MAGIC,
    PARAMS_VERSION,
    decode_parameters,
    encode_parameters,
    load_parameters,
    save_parameters,
    with_checksum,
)
from app.core.errors import FileChecksumError, FileFormatError, FileTruncatedError, FileVersionError


@pytest.fixture
def arrays(rng):
    return OrderedDict(
        [
            ("anfl.afg.0.weight", rng.standard_normal((5, 5))),
            ("anfl.afg.0.bias", rng.standard_normal(5)),
            ("scalar", np.array(np.pi)),
            ("edge", np.array([np.finfo(float).tiny, -0.0, 1e308])),
        ]
    )


class TestParameterFile:
    def test_round_trip_is_bit_exact(self, arrays, tmp_path):
        path = tmp_path / "params.bin"
        save_parameters(path, arrays, metadata=b'{"stage": "stage1"}')
        loaded, metadata = load_parameters(path)

        assert list(loaded) == list(arrays)
        for name, array in arrays.items():
            assert loaded[name].shape == array.shape
            assert loaded[name].tobytes() == array.tobytes()
        assert metadata == b'{"stage": "stage1"}'

    def test_encoding_is_deterministic(self, arrays):
        assert encode_parameters(arrays) == encode_parameters(arrays)

    def test_bad_magic(self, arrays):
        buffer = bytearray(encode_parameters(arrays))
        buffer[0:8] = b"NOTMAGIC"
        with pytest.raises(FileFormatError):
            decode_parameters(bytes(buffer))

    def test_unsupported_version(self, arrays):
        buffer = bytearray(encode_parameters(arrays))
        buffer[len(PARAMS_MAGIC):len(PARAMS_MAGIC) + 2] = struct.pack("<H", 99)
        with pytest.raises(FileVersionError):
            decode_parameters(bytes(buffer))

    @pytest.mark.parametrize("keep", [0.25, 0.5, 0.9])
    def test_truncated(self, arrays, keep):
        buffer = encode_parameters(arrays)
        with pytest.raises(FileTruncatedError):
            decode_parameters(buffer[: int(len(buffer) * keep)])

    def test_missing_trailer_is_truncation(self, arrays):
        with pytest.raises(FileTruncatedError):
            decode_parameters(encode_parameters(arrays)[:-2])

    def test_corrupted_payload(self, arrays):
        buffer = bytearray(encode_parameters(arrays))
        buffer[-12] ^= 0xFF
        with pytest.raises(FileChecksumError):
            decode_parameters(bytes(buffer))

    def test_trailing_bytes(self, arrays):
        with pytest.raises(FileFormatError):
            decode_parameters(encode_parameters(arrays) + b"\x00")

    def test_errors_carry_data_exit_code(self, arrays):
        with pytest.raises(FileTruncatedError) as info:
            decode_parameters(encode_parameters(arrays)[:10])
        assert info.value.exit_code == 2
        assert info.value.code == "truncated"

    def test_oversized_shape_is_rejected_before_allocation(self):
        payload = b"".join(
            [
                PARAMS_MAGIC,
                struct.pack("<HII", PARAMS_VERSION, 0, 1),
                struct.pack("<H", 1),
                b"w",
                struct.pack("<B3I", 3, 0xFFFFFFFF, 0xFFFFFFFF, 0xFFFFFFFF),
            ]
        )
        with pytest.raises(FileTruncatedError):
            decode_parameters(with_checksum(payload))
