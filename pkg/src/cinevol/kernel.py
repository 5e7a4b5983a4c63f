"""Kernel selection: compiled extension if available, interpreted fallback.

cinevol._kernel is plain Python written in Cython pure-python mode.  When
the package was built with a C compiler the same source exists as the
cinevol._kernel_c extension; both expose identical functions and produce
bit-identical results (the extension is compiled with -ffp-contract=off
so no FMA reassociation diverges from the interpreter).
"""

try:
    from cinevol import _kernel_c as impl

    _COMPILED = True
except ImportError:
    from cinevol import _kernel as impl

    _COMPILED = False


def kernel_is_compiled() -> bool:
    """True when the compiled extension kernel is in use."""
    return _COMPILED


def load_fallback():
    """Import the interpreted kernel regardless of what `impl` resolved to.

    Used by the benchmark and parity tests to compare both kernels.
    """
    from cinevol import _kernel

    return _kernel
