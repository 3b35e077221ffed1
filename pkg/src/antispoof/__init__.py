"""CNN-feature + RBF-SVM face anti-spoofing pipeline."""

__version__ = "0.1.0"
