"""Subgroup mixable estimation of treatment efficacy in biomarker subgroups."""

__version__ = "0.1.0"

from .binary import (ResponseTable, mix_rr_correct, mix_rr_naive_log,
                     mix_rr_naive_prevalence, rr_overall, rr_subgroup)
from .engine import (EfficacyEstimate, EfficacyReport, Measure, Scale, Summary, efficacy,
                     efficacy_points, linear_mix_efficacy, median_gradients, mixture_mean,
                     mixture_median, subgroup_means, subgroup_medians)
from .likelihood import (FitResult, SubjectRecord, SurvivalData, fit_mle, log_likelihood,
                         observed_information)
from .mmplot import MMPlotSpec, MMPoint, render_mm_plot
from .simulci import bonferroni_quantile, equicoordinate_quantile
from .survival import (Arm, ArmGroupLabel, Group, MixtureSpec, ModelParams,
                       mixture_density, mixture_hazard_ratio, mixture_survival,
                       naive_hr_event_weighted, naive_hr_lsmeans, subgroup_density,
                       subgroup_hazard, subgroup_survival)
from .trialsim import (SCENARIOS, ScenarioConfig, SimMetrics, calibrate_censoring,
                       generate_trial, run_study)
