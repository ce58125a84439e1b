"""Package containing the generation of seeded synthetic exam datasets with planted
image and report signal, their preprocessing and augmentation, and the AUC oracle."""
from .synthconfig import SynthConfig, load_synth_config, DENSITY_CATEGORIES
from .samplegenerator import Sample, generate_sample, sample_rng
from .preprocessing import preprocess, resize_bilinear, DEFAULT_THRESHOLD
from .augmentation import AugmentationParameters, draw_augmentation, apply_augmentation, augment
from .bayesoracle import OracleReport, bayes_auc_oracle, texture_cells
from .datasetstore import SyntheticDataset, load_dataset, write_dataset, split_indices, \
    DATASET_FILES, SPLITS, TASKS
from .datasynthesisservice import DataSynthesisService, generate_dataset, generate_samples
