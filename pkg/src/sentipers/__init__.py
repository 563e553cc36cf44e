"""Persian sentence-level sentiment pipeline: corpus parsing, preprocessing, label
reduction, augmentation, embeddings, numpy BLSTM/CNN models, baselines and
weighted-F1 evaluation."""

__version__ = "0.1.0"

from .dataset import AnnotatedSentence, Dataset, LabelScheme, read_dataset, write_dataset  # noqa: E402

__all__ = ["AnnotatedSentence", "Dataset", "LabelScheme", "read_dataset", "write_dataset", "__version__"]
