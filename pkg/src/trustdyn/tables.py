"""Reference constants the simulator and analyses are calibrated against."""

from __future__ import annotations

ARCHETYPES = ("BDM", "Disbeliever", "Oscillator")

# Reliability level -> (hits, misses, false alarms, correct rejections)
SDT_COUNTS = {
    62: (8, 2, 36, 54),
    64: (16, 4, 32, 48),
    66: (24, 6, 28, 42),
    68: (32, 8, 24, 36),
    70: (40, 10, 20, 30),
}

SDT_CRITERION = -0.20
SDT_DPRIME = 1.09

# Fitted trust parameters per archetype: (alpha0, beta0, gain_success, gain_failure)
ARCHETYPE_PARAMS = {
    "BDM": (231.93, 128.35, 2.21, 1.88),
    "Disbeliever": (71.78, 335.22, 0.43, 6.48),
    "Oscillator": (3.83, 3.47, 0.04, 0.07),
}

# Cluster-mean clustering features: (avg_log_trust, rmse)
ARCHETYPE_FEATURES = {
    "BDM": (-0.554, 0.057),
    "Disbeliever": (-2.099, 0.064),
    "Oscillator": (-0.970, 0.243),
}

ARCHETYPE_SIZES = {"BDM": 91, "Disbeliever": 25, "Oscillator": 14}

# Mean (SD) ratio of blindly-following trials per archetype
BLIND_FOLLOW_RATE = {"BDM": 0.42, "Disbeliever": 0.18, "Oscillator": 0.40}

# name -> (low, high, {archetype: (mean, sd)}), ordered as the survey table.
CHARACTERISTICS = {
    "power_distance": (1, 5, {"BDM": (1.82, 0.46), "Disbeliever": (1.80, 0.54), "Oscillator": (1.86, 0.73)}),
    "uncertainty_avoidance": (1, 5, {"BDM": (4.25, 0.48), "Disbeliever": (4.36, 0.50), "Oscillator": (4.27, 0.58)}),
    "collectivism": (1, 5, {"BDM": (3.08, 0.63), "Disbeliever": (3.21, 0.69), "Oscillator": (3.21, 0.90)}),
    "long_term_orientation": (1, 5, {"BDM": (4.09, 0.47), "Disbeliever": (4.19, 0.52), "Oscillator": (4.26, 0.36)}),
    "masculinity": (1, 5, {"BDM": (1.81, 0.67), "Disbeliever": (1.68, 0.77), "Oscillator": (2.38, 1.12)}),
    "attentional_capacity": (1, 4, {"BDM": (2.67, 0.40), "Disbeliever": (2.58, 0.38), "Oscillator": (2.79, 0.32)}),
    "positive_affect": (1, 5, {"BDM": (2.80, 0.71), "Disbeliever": (2.75, 0.76), "Oscillator": (3.37, 0.65)}),
    "negative_affect": (1, 5, {"BDM": (1.36, 0.45), "Disbeliever": (1.35, 0.31), "Oscillator": (1.31, 0.41)}),
    "extraversion": (1, 5, {"BDM": (2.99, 0.95), "Disbeliever": (2.74, 0.96), "Oscillator": (3.54, 1.08)}),
    "agreeableness": (1, 5, {"BDM": (3.99, 0.64), "Disbeliever": (3.90, 0.75), "Oscillator": (3.96, 0.70)}),
    "conscientiousness": (1, 5, {"BDM": (3.38, 0.86), "Disbeliever": (3.15, 1.17), "Oscillator": (3.57, 0.58)}),
    "neuroticism": (1, 5, {"BDM": (2.67, 0.73), "Disbeliever": (3.09, 0.83), "Oscillator": (2.61, 0.90)}),
    "intellect": (1, 5, {"BDM": (3.77, 0.72), "Disbeliever": (3.57, 0.93), "Oscillator": (4.23, 0.46)}),
    "risk_propensity": (1, 9, {"BDM": (4.20, 1.28), "Disbeliever": (4.15, 1.38), "Oscillator": (4.83, 1.14)}),
    "intuitive": (1, 5, {"BDM": (3.35, 0.65), "Disbeliever": (3.23, 0.74), "Oscillator": (3.53, 0.86)}),
    "dependent": (1, 5, {"BDM": (3.75, 0.67), "Disbeliever": (3.74, 0.68), "Oscillator": (3.54, 0.65)}),
    "rational": (1, 5, {"BDM": (4.09, 0.49), "Disbeliever": (4.03, 0.81), "Oscillator": (4.36, 0.42)}),
    "avoidant": (1, 5, {"BDM": (2.97, 1.04), "Disbeliever": (2.88, 1.09), "Oscillator": (2.43, 1.00)}),
    "spontaneous": (1, 5, {"BDM": (2.65, 0.70), "Disbeliever": (2.82, 0.68), "Oscillator": (2.63, 0.63)}),
    "reasoning_score": (0, 7, {"BDM": (5.56, 1.42), "Disbeliever": (5.04, 1.79), "Oscillator": (5.14, 2.32)}),
    "trust_propensity": (1, 5, {"BDM": (3.29, 0.44), "Disbeliever": (3.05, 0.69), "Oscillator": (3.13, 0.64)}),
    "attitude_interaction": (1, 5, {"BDM": (2.17, 0.63), "Disbeliever": (2.26, 0.68), "Oscillator": (1.96, 0.53)}),
    "attitude_social_influence": (1, 5, {"BDM": (3.22, 0.60), "Disbeliever": (3.41, 0.82), "Oscillator": (3.09, 0.94)}),
    "performance_expectancy": (1, 7, {"BDM": (5.73, 0.70), "Disbeliever": (5.24, 1.39), "Oscillator": (6.07, 0.68)}),
    "effort_expectancy": (1, 7, {"BDM": (5.24, 0.72), "Disbeliever": (5.17, 0.78), "Oscillator": (5.57, 0.99)}),
    "self_efficacy": (1, 5, {"BDM": (3.45, 0.74), "Disbeliever": (3.63, 0.88), "Oscillator": (3.82, 0.81)}),
    "pas_high_expectations": (1, 5, {"BDM": (1.88, 0.57), "Disbeliever": (1.55, 0.54), "Oscillator": (2.14, 0.79)}),
    "pas_all_or_none": (1, 5, {"BDM": (1.80, 0.62), "Disbeliever": (2.00, 0.87), "Oscillator": (1.79, 0.70)}),
}

DIMENSIONS = tuple(CHARACTERISTICS)

PREDICTIVE_DIMENSIONS = (
    "masculinity",
    "positive_affect",
    "extraversion",
    "neuroticism",
    "intellect",
    "performance_expectancy",
    "pas_high_expectations",
)
