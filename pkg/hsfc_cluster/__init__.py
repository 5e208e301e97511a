__version__ = "0.1.0"

__all__ = [
    "config",
    "datagen",
    "dataio",
    "errors",
    "evaluation",
    "fcm",
    "hsfc",
    "models",
    "quasi_newton",
    "runner",
    "smoothing",
    "__version__",
]
