"""Binary checkpoint container.

Layout: the magic ``SMAE1``, an unsigned 64-bit little-endian manifest
length, a JSON manifest, then the little-endian 32-bit float payloads of
every tensor in manifest order.
"""

import json
import struct
from typing import Any, Dict, List, Tuple

import numpy as np

from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin
from smae.nn import ParamStore

MAGIC = b"SMAE1"
PAYLOAD_DTYPE = "<f4"
_LENGTH = struct.Struct("<Q")


class ContainerErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class CheckpointCodec(ErrorGeneratorMixin):
    """Encode and decode parameter stores."""

    CKPT_ERR_MAGIC = 400
    CKPT_ERR_TRUNCATED = 401
    CKPT_ERR_MANIFEST = 402
    CKPT_ERR_DTYPE = 403
    _ERRORS = {
        CKPT_ERR_MAGIC: ContainerErrorDescriptor(
            CKPT_ERR_MAGIC, "Bad magic", "not a SMAE1 checkpoint"
        ),
        CKPT_ERR_TRUNCATED: ContainerErrorDescriptor(
            CKPT_ERR_TRUNCATED,
            "Truncated",
            "checkpoint truncated: {what}",
        ),
        CKPT_ERR_MANIFEST: ContainerErrorDescriptor(
            CKPT_ERR_MANIFEST,
            "Bad manifest",
            "malformed checkpoint manifest: {what}",
        ),
        CKPT_ERR_DTYPE: ContainerErrorDescriptor(
            CKPT_ERR_DTYPE,
            "Unsupported dtype",
            'tensor "{name}" has unsupported dtype "{dtype}"',
        ),
    }

    @classmethod
    def encode(
        cls, store: ParamStore, header: Dict[str, Any]
    ) -> bytes:
        """Serialize a store.

        :param store: Parameters and buffers
        :param header: Extra JSON-serializable manifest entries
        :return: Container bytes
        """
        entries: List[Dict[str, Any]] = []
        chunks: List[bytes] = []
        offset = 0
        tensors = [(n, "param", t.data) for n, t in store.params()] + [
            (n, "buffer", a) for n, a in store.buffers()
        ]
        for name, kind, data in tensors:
            raw = np.ascontiguousarray(data, dtype=PAYLOAD_DTYPE).tobytes()
            entries.append(
                {
                    "name": name,
                    "kind": kind,
                    "shape": list(data.shape),
                    "dtype": PAYLOAD_DTYPE,
                    "offset": offset,
                    "nbytes": len(raw),
                }
            )
            chunks.append(raw)
            offset += len(raw)
        manifest = dict(header)
        manifest["tensors"] = entries
        text = json.dumps(manifest, sort_keys=True).encode("utf-8")
        return MAGIC + _LENGTH.pack(len(text)) + text + b"".join(chunks)

    @classmethod
    def decode(
        cls, data: bytes, dtype=np.float64
    ) -> Tuple[ParamStore, Dict[str, Any]]:
        """Deserialize a store.

        :param data: Container bytes
        :param dtype: Dtype of the rebuilt store
        :return: Store and the manifest without its tensor table
        """
        if data[: len(MAGIC)] != MAGIC:
            raise cls.get_error_from_code(cls.CKPT_ERR_MAGIC)
        start = len(MAGIC) + _LENGTH.size
        if len(data) < start:
            raise cls.get_error_from_code(
                cls.CKPT_ERR_TRUNCATED, what="no manifest length"
            )
        (length,) = _LENGTH.unpack(data[len(MAGIC) : start])
        if len(data) < start + length:
            raise cls.get_error_from_code(
                cls.CKPT_ERR_TRUNCATED, what="manifest"
            )
        try:
            manifest = json.loads(data[start : start + length].decode("utf-8"))
            entries = manifest.pop("tensors")
        except (ValueError, KeyError, AttributeError) as ex:
            raise cls.get_error_from_code(
                cls.CKPT_ERR_MANIFEST, what=str(ex), _exception=ex
            )
        payload = data[start + length :]
        store = ParamStore(dtype)
        for entry in entries:
            try:
                name = entry["name"]
                kind = entry["kind"]
                shape = tuple(entry["shape"])
                offset = entry["offset"]
                nbytes = entry["nbytes"]
                entry_dtype = entry["dtype"]
            except (KeyError, TypeError) as ex:
                raise cls.get_error_from_code(
                    cls.CKPT_ERR_MANIFEST, what=str(ex), _exception=ex
                )
            if entry_dtype != PAYLOAD_DTYPE:
                raise cls.get_error_from_code(
                    cls.CKPT_ERR_DTYPE, name=name, dtype=entry_dtype
                )
            if offset + nbytes > len(payload):
                raise cls.get_error_from_code(
                    cls.CKPT_ERR_TRUNCATED, what='tensor "{}"'.format(name)
                )
            values = np.frombuffer(
                payload, dtype=PAYLOAD_DTYPE, count=nbytes // 4, offset=offset
            )
            if values.size != int(np.prod(shape, dtype=int)):
                raise cls.get_error_from_code(
                    cls.CKPT_ERR_MANIFEST,
                    what='tensor "{}" size does not match shape'.format(name),
                )
            values = values.reshape(shape).astype(dtype)
            if kind == "param":
                store.add_param(name, values)
            elif kind == "buffer":
                store.add_buffer(name, values)
            else:
                raise cls.get_error_from_code(
                    cls.CKPT_ERR_MANIFEST,
                    what='unknown tensor kind "{}"'.format(kind),
                )
        return store, manifest
