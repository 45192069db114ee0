"""Record graphs of skip-free random walks and their family-tree laws."""
from .seq import (CENSORED, Censored, CensoredError, DiscreteLaw, IncrementDistribution,
                  OffspringLaw, Value, Window, bar_tilde_pi, hitting_prob_c, joint_mark_law,
                  offspring_law, parse_distribution, parse_offspring, partial_sum,
                  sample_window, size_biased, tilted_distribution, two_point, unwrap,
                  upward_ratio, window_from_marks)
from .record import (FoilPartition, GraphTreeView, RecordGraph, ShiftTreeView, L_of,
                     build_record_graph, children_positions, climbing_map, descendants_of,
                     foils, interval_property_check, l_of, offspring_count, r_perp, r_perp_at,
                     record_iterate, record_map, strict_record_map, type_of)
from .trees import (OrderedTree, SuccessionLine, ball_key, canonical_encode, level_offset,
                    lukasiewicz_sum_check, parent_shift, pred_a, rls_compare, succ_b,
                    succession_line, tree_from_parents)
from .samplers import (SamplerBudget, TreeOverflow, canopy_level_law, regular_tree_ball,
                       sample_canopy, sample_egwt, sample_ekt, sample_gw, sample_mekt,
                       sample_sbgw, sample_tgwt, sample_unimodular_mekt, unimodularise_joining)
from .transforms import (MarkedComponent, backward_phi, backward_phi_hat,
                         construction1_zero_mean, construction2_zero_mean,
                         construction_positive_mean, foil_minimality_check, forward_psi,
                         forward_psi_hat, roundtrip_psi_phi)
from .verify import (EmpiricalDistribution, TestReport, check_dn_radon_nikodym,
                     check_fprob_limit, check_hitting_powers, check_joint_mark_law,
                     check_parent_probability, check_phase, check_record_representation,
                     check_rperp_preservation, check_tau_joint_law, chi_square_gof, tv_distance)

__version__ = "0.1.0"
