"""Shim for typing- and annotation-related symbols so that modules don't pay for `typing` or `numpy.typing` at import.

Do not import annotation-only symbols directly from this module (e.g. `from ._typing_compat import FloatArray`); that
triggers the module-level `__getattr__`. Import the module and use attribute access instead
(`from . import _typing_compat as _t`) together with `from __future__ import annotations`, so the symbols are only ever
looked at by type checkers.
"""

from __future__ import annotations

import sys


TYPE_CHECKING = False

if TYPE_CHECKING:
    import numpy as np
    import numpy.typing as npt


__all__ = (
    # Somewhat version-dependent
    "Self",
    "TypeAlias",
    # Array aliases
    "FloatArray",
    "BoolArray",
    "ArrayLike",
    # Everything else
    "Any",
    "Optional",
    "Union",
)


class _PlaceholderMeta(type):
    _source_module: str

    def __init__(self, *args: object, **kwargs: object):
        super().__init__(*args, **kwargs)
        self.__doc__ = f"Placeholder for {self._source_module}.{self.__name__}."

    def __repr__(self):
        return f"<import placeholder for {self._source_module}.{self.__name__}>"


if TYPE_CHECKING:
    from typing_extensions import Self, TypeAlias

    FloatArray: TypeAlias = npt.NDArray[np.float64]
    BoolArray: TypeAlias = npt.NDArray[np.bool_]
    ArrayLike: TypeAlias = npt.ArrayLike
else:
    if sys.version_info < (3, 10):

        class TypeAlias(metaclass=_PlaceholderMeta):
            _source_module = "typing"

    if sys.version_info < (3, 11):

        class Self(metaclass=_PlaceholderMeta):
            _source_module = "typing"


def __getattr__(name: str, /) -> object:
    # Save the imported symbols in the globals to avoid future imports.

    global Any, Optional, Union  # noqa: PLW0603

    if name in {"Any", "Optional", "Union"}:
        from typing import Any, Optional, Union

        return globals()[name]

    if (
        (name == "TypeAlias" and sys.version_info >= (3, 10))
        or (name == "Self" and sys.version_info >= (3, 11))
    ):  # fmt: skip
        import typing

        symbol = getattr(typing, name)
        globals()[name] = symbol
        return symbol

    if name in {"FloatArray", "BoolArray", "ArrayLike"}:
        import numpy as np
        import numpy.typing as npt

        symbol = {
            "FloatArray": npt.NDArray[np.float64],
            "BoolArray": npt.NDArray[np.bool_],
            "ArrayLike": npt.ArrayLike,
        }[name]
        globals()[name] = symbol
        return symbol

    msg = f"module {__name__!r} has no attribute {name!r}"
    raise AttributeError(msg)


def __dir__() -> list[str]:
    return sorted(set(globals()).union(__all__))
