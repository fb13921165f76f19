//! Reference results for comparison reports.

/// Savings and iterated tabu totals for the deterministic variants,
/// indexed by CMT id 1..=14.
pub const MCVRP_REFERENCE: [(usize, f64, f64); 14] = [
    (1, 625.55, 532.02),
    (2, 997.74, 855.98),
    (3, 1001.05, 868.40),
    (4, 1276.52, 1073.06),
    (5, 1643.49, 1361.12),
    (6, 652.01, 560.88),
    (7, 1058.42, 936.36),
    (8, 1053.74, 894.30),
    (9, 1399.72, 1218.64),
    (10, 1678.67, 1522.51),
    (11, 1200.95, 1060.43),
    (12, 939.99, 843.25),
    (13, 2368.85, 1522.61),
    (14, 945.57, 940.08),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticReference {
    pub name: &'static str,
    pub construct_fixed: f64,
    pub construct_expected: f64,
    pub fixed: f64,
    pub expected: f64,
    pub routes: usize,
    pub occupancy: f64,
}

const fn r(
    name: &'static str,
    construct_fixed: f64,
    construct_expected: f64,
    fixed: f64,
    expected: f64,
    routes: usize,
    occupancy: f64,
) -> StochasticReference {
    StochasticReference {
        name,
        construct_fixed,
        construct_expected,
        fixed,
        expected,
        routes,
        occupancy,
    }
}

pub const STOCHASTIC_REFERENCE: [StochasticReference; 35] = [
    r("set1-vrpnc1", 856.99, 981.92, 751.65, 874.00, 11, 67.39),
    r("set1-vrpnc1b", 833.83, 994.37, 742.11, 867.05, 10, 76.48),
    r("set1-vrpnc2", 1352.80, 1568.57, 1216.97, 1428.44, 18, 80.60),
    r(
        "set1-vrpnc2b",
        1277.90,
        1613.63,
        1179.15,
        1434.62,
        17,
        86.81,
    ),
    r("set1-vrpnc3", 1594.63, 1844.10, 1449.37, 1698.84, 21, 52.42),
    r(
        "set1-vrpnc3b",
        1436.62,
        1694.48,
        1308.22,
        1557.79,
        18,
        61.35,
    ),
    r("set1-vrpnc4", 2119.34, 2491.19, 1989.58, 2357.61, 31, 54.12),
    r(
        "set1-vrpnc4b",
        1921.17,
        2309.80,
        1771.66,
        2140.08,
        26,
        63.59,
    ),
    r("set1-vrpnc5", 2709.64, 3190.06, 2516.97, 2997.36, 41, 58.41),
    r(
        "set1-vrpnc5b",
        2417.45,
        2960.43,
        2249.09,
        2729.75,
        35,
        67.47,
    ),
    r(
        "set1-vrpnc11",
        3099.82,
        3711.78,
        2758.42,
        3370.38,
        25,
        43.81,
    ),
    r(
        "set1-vrpnc11b",
        2558.73,
        3201.77,
        2442.20,
        3024.16,
        21,
        54.11,
    ),
    r(
        "set1-vrpnc12",
        1605.35,
        1893.30,
        1531.06,
        1819.61,
        22,
        62.50,
    ),
    r(
        "set1-vrpnc12b",
        1452.24,
        1787.99,
        1363.20,
        1663.72,
        19,
        74.20,
    ),
    r("set2-vrpnc1", 802.09, 889.38, 760.23, 814.59, 11, 56.57),
    r("set2-vrpnc1b", 797.60, 874.45, 714.19, 770.27, 10, 66.01),
    r("set2-vrpnc2", 1165.75, 1302.85, 1060.94, 1147.06, 14, 75.40),
    r(
        "set2-vrpnc2b",
        1167.85,
        1371.19,
        1092.17,
        1180.47,
        15,
        79.43,
    ),
    r("set2-vrpnc3", 1536.92, 1668.15, 1444.20, 1575.43, 21, 46.55),
    r(
        "set2-vrpnc3b",
        1395.49,
        1564.98,
        1284.45,
        1415.98,
        17,
        54.28,
    ),
    r("set2-vrpnc4", 2104.51, 2300.67, 1981.25, 2177.47, 31, 47.21),
    r(
        "set2-vrpnc4b",
        1977.43,
        2173.59,
        1752.01,
        1948.47,
        26,
        54.94,
    ),
    r("set2-vrpnc5", 2687.62, 2944.24, 2485.66, 2735.13, 41, 49.08),
    r(
        "set2-vrpnc5b",
        2388.69,
        2661.97,
        2172.37,
        2422.13,
        34,
        57.95,
    ),
    r(
        "set2-vrpnc11",
        3051.15,
        3483.26,
        2773.60,
        3205.71,
        24,
        37.39,
    ),
    r(
        "set2-vrpnc11b",
        2619.38,
        3080.06,
        2480.30,
        2912.41,
        20,
        44.89,
    ),
    r(
        "set2-vrpnc12",
        1519.60,
        1640.19,
        1461.18,
        1581.75,
        21,
        54.52,
    ),
    r(
        "set2-vrpnc12b",
        1407.81,
        1572.45,
        1355.78,
        1663.72,
        18,
        64.03,
    ),
    r("set3-vrpnc1", 890.52, 962.48, 734.53, 792.70, 10, 50.53),
    r("set3-vrpnc2", 1226.37, 1431.68, 1112.36, 1217.71, 16, 59.49),
    r("set3-vrpnc3", 1547.10, 1684.97, 1397.85, 1529.09, 19, 41.91),
    r("set3-vrpnc4", 2065.57, 2290.76, 1897.65, 2093.81, 28, 41.80),
    r("set3-vrpnc5", 2644.59, 2894.29, 2444.27, 2694.94, 38, 43.96),
    r(
        "set3-vrpnc11",
        2971.21,
        3407.36,
        2740.78,
        3172.89,
        23,
        33.55,
    ),
    r(
        "set3-vrpnc12",
        1546.01,
        1677.53,
        1481.37,
        1601.94,
        19,
        48.88,
    ),
];

pub fn stochastic_reference(name: &str) -> Option<&'static StochasticReference> {
    STOCHASTIC_REFERENCE.iter().find(|r| r.name == name)
}

pub fn mcvrp_reference(id: usize) -> Option<(f64, f64)> {
    MCVRP_REFERENCE
        .iter()
        .find(|r| r.0 == id)
        .map(|r| (r.1, r.2))
}
