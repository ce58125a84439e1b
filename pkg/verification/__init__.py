"""Package containing the numerical self-verification of the pipeline (the verify command)."""
from .verificationservice import VerificationService, CheckResult, run_checks, check_gradients, \
    check_attention_rows, check_permutation_invariance, check_auc, check_preprocessing, \
    toy_model, FAULTS
