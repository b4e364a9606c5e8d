"""Published seed-mean CIFAR-100 results for two width-scaled model families.

Each row: (config_id, parameter count, mean top-1 accuracy in percent).
Used as golden fixtures for the scaling fits and local-exponent checks.
"""

SCALECNN = [
    ("c4", 21_936, 41.71),
    ("c8", 80_348, 56.73),
    ("c12", 175_336, 62.91),
    ("c16", 306_900, 66.49),
    ("c24", 679_756, 70.05),
    ("c32", 1_198_916, 71.81),
    ("c48", 2_676_148, 73.82),
    ("c64", 4_738_596, 75.32),
]

MOBILENETV2 = [
    ("m0.10", 214_180, 51.91),
    ("m0.15", 262_596, 55.99),
    ("m0.25", 366_212, 57.17),
    ("m0.35", 524_228, 60.52),
    ("m0.50", 815_780, 63.21),
    ("m0.75", 1_483_524, 65.92),
    ("m1.00", 2_351_972, 67.00),
    ("m1.50", 5_129_252, 69.34),
    ("m2.00", 8_953_188, 70.01),
    ("m3.00", 19_803_748, 70.15),
]


def error_points(rows):
    from scalelens import ScalingPoint
    return [
        ScalingPoint(n_params=n, metric_value=1.0 - acc / 100.0, seed=0,
                     config_id=cfg)
        for cfg, n, acc in rows
    ]
