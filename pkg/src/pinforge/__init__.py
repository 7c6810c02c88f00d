"""pinforge: offline analysis of inter-keystroke timing attacks on PINs.

Builds a pointing-law timing model of keypad entry, generates a timing
dictionary over the PIN space, ranks candidates against observed interval
sequences, measures per-PIN strength, simulates typists, and evaluates a
circular-keypad countermeasure.
"""

__version__ = "0.1.0"

from .geometry import (ENTER, KeyGeometry, KeypadLayout, circular_layout,
                       index_of_difficulty, key_distance, load_layout,
                       save_layout, standard_numpad)
from .model import (DEFAULT_A, DEFAULT_B, ExtendedModel, FitReport,
                    FittsModel, TrainingSample, fit_extended, fit_fitts,
                    ingest_keystroke_log, predict_interkey)
from .dictionary import (DigitConstraint, TimingDictionary, build_dictionary,
                         build_interleaved_dictionary, load_dictionary,
                         predicted_sequence, reduce_dictionary,
                         save_dictionary)
from .attack import (AttackOutcome, ObservedEntry, RankedGuessList,
                     average_entries, cosine_similarity, euclidean_score,
                     pearson_score, random_baseline, rank_candidates,
                     run_attack, success_curve)
from .strength import (FrequencyRecord, LevelPartition, StrengthProfile,
                       frequency_analysis, partition_levels, strength_measure,
                       strength_measure_sampled)
from .simulator import (GroundTruth, TypistProfile, default_profiles,
                        export_keystroke_log, simulate_cohort, simulate_entry)
from .harness import (ExperimentPlan, ExperimentReport, plan_from_text,
                      plan_to_text, run_countermeasure, run_general,
                      run_known_digits, run_multi_entry, run_targeted)
