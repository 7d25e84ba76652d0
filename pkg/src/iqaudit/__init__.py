"""Dataset quality auditing: scores, predictability, and causal checks."""

from .causal import (
    AceResult,
    Claim,
    ClaimResult,
    Dag,
    SampleFrame,
    ScmSpec,
    ace_estimate,
    builtin_claims,
    builtin_dags,
    builtin_scms,
    d_separated,
    simulate,
    verify_claims,
    within_stratum_auc,
    write_frame_csv,
)
from .corruptions import (
    KINDS,
    CorruptionSpec,
    MixturePolicy,
    apply_corruption,
    build_mixture,
    corrupt_dataset,
    corrupted_count,
)
from .errors import AuditError, InputError, IoFormatError
from .images import ImageBuffer, decode_pnm, encode_pnm, to_luminance, total_variation
from .predict import (
    LogRegModel,
    SplitSpec,
    auc,
    cross_entropy,
    fit_logreg,
    per_image_kfold,
    per_label_predictability,
    pointwise_predictability,
    predict_proba,
)
from .rng import keyed_stream, stream_key
from .stats import (
    GroupSummary,
    average_ranks,
    bootstrap_ci,
    correlation_report,
    group_means,
    kendall_tau_b,
    pearson,
    spearman,
    write_report_csv,
)
from .tensorio import (
    CorrectnessRecord,
    CorrectnessTable,
    DatasetManifest,
    ManifestEntry,
    ScoreRecord,
    ScoreTable,
    TensorF32,
    check_alignment,
    format_value,
    load_correctness,
    load_manifest,
    load_npy,
    load_scores,
    parse_npy,
    save_npy,
    write_correctness,
    write_manifest,
    write_npy,
    write_scores,
)
from .tgscores import (
    QualityTriple,
    normalize_rows,
    score_records,
    strong_tg_scores,
    zeroshot_similarities,
    zsclip_scores,
)

__version__ = "0.1.0"

__all__ = [
    "AceResult",
    "AuditError",
    "Claim",
    "ClaimResult",
    "CorrectnessRecord",
    "CorrectnessTable",
    "CorruptionSpec",
    "Dag",
    "DatasetManifest",
    "GroupSummary",
    "ImageBuffer",
    "InputError",
    "IoFormatError",
    "KINDS",
    "LogRegModel",
    "ManifestEntry",
    "MixturePolicy",
    "QualityTriple",
    "SampleFrame",
    "ScmSpec",
    "ScoreRecord",
    "ScoreTable",
    "SplitSpec",
    "TensorF32",
    "ace_estimate",
    "apply_corruption",
    "auc",
    "average_ranks",
    "bootstrap_ci",
    "build_mixture",
    "builtin_claims",
    "builtin_dags",
    "builtin_scms",
    "check_alignment",
    "corrupt_dataset",
    "corrupted_count",
    "correlation_report",
    "cross_entropy",
    "d_separated",
    "decode_pnm",
    "encode_pnm",
    "fit_logreg",
    "format_value",
    "group_means",
    "kendall_tau_b",
    "keyed_stream",
    "load_correctness",
    "load_manifest",
    "load_npy",
    "load_scores",
    "normalize_rows",
    "parse_npy",
    "pearson",
    "per_image_kfold",
    "per_label_predictability",
    "pointwise_predictability",
    "predict_proba",
    "save_npy",
    "score_records",
    "simulate",
    "spearman",
    "stream_key",
    "strong_tg_scores",
    "to_luminance",
    "total_variation",
    "verify_claims",
    "within_stratum_auc",
    "write_correctness",
    "write_frame_csv",
    "write_manifest",
    "write_npy",
    "write_report_csv",
    "write_scores",
    "zeroshot_similarities",
    "zsclip_scores",
]
