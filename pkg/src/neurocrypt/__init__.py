"""Black-box cipher strength evaluation by training dense networks to mimic ciphers."""
from neurocrypt.bitcore import BitBlock
from neurocrypt.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "BitBlock", "__version__"]
