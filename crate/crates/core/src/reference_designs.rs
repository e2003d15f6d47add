//! Reference 53-parameter designs (`L = 25`) in the text form accepted by
//! [`DesignVector::from_str`](crate::geometry::DesignVector), used as fixtures.

pub const BAND_5_6_START_1: &str = "42 0.47 5.72 0.24 0.4 0.53 0.54 0.52 0.42 0.28 0.38 0.52 0.52 0.49 0.4 0.32 0.32 0.33 0.35 0.35 0.36 0.48 0.58 0.64 0.62 0.56 0.45 0.24 0 0.05 0.21 0.32 0.3 0.11 0.18 0.12 0.05 0.29 0.32 0.28 0.41 0.49 0.46 0.45 0.37 0.46 0.09 0.23 0.25 0.25 0.24 0.2 0.16";
pub const BAND_5_6_START_2: &str = "45 0.31 1.58 0.57 0.5 0.53 0.58 0.48 0.37 0.34 0.37 0.34 0.31 0.28 0.42 0.34 0.27 0.3 0.43 0.34 0.38 0.35 0.22 0.09 0.13 0.25 0.37 0.57 0 0.19 0.25 0.19 0.14 0.15 0.41 0.34 0.38 0.41 0.29 0.1 0.31 0.44 0.43 0.09 0.18 0.36 0.22 0.03 0.28 0.87 0.15 0.06 0.03";
pub const BAND_5_6_START_3: &str = "45 0.38 4.63 0.19 0.33 0.44 0.33 0.42 0.35 0.2 0.06 0.17 0.32 0.28 0.36 0.44 0.39 0.23 0.17 0.3 0.23 0.37 0.42 0.44 0.4 0.35 0.41 0.19 0 0.04 0.11 0.42 0.37 0.14 0.23 0.01 0.55 0 0.6 0.2 0.42 0.12 0.22 0.18 0.13 0.52 0.15 0.39 0.33 0.34 0.42 0.23 0.18";
pub const BAND_5_6_COARSE_OPT_1: &str = "41.94 0.5 5.78 0.21 0.41 0.58 0.59 0.57 0.43 0.32 0.42 0.5 0.48 0.54 0.47 0.29 0.3 0.36 0.37 0.35 0.37 0.52 0.57 0.66 0.6 0.57 0.46 0.25 0.12 0.09 0.25 0.35 0.35 0.14 0.21 0.14 0.08 0.32 0.35 0.28 0.39 0.45 0.44 0.45 0.33 0.44 0.08 0.26 0.26 0.26 0.25 0.19 0.16";
pub const BAND_5_6_FINE_OPT_1: &str = "41.96 0.5 5.81 0.22 0.41 0.57 0.59 0.57 0.43 0.31 0.41 0.5 0.48 0.54 0.47 0.29 0.3 0.37 0.38 0.36 0.37 0.51 0.57 0.66 0.59 0.56 0.46 0.21 0.01 0.09 0.24 0.33 0.33 0.14 0.21 0.15 0.1 0.3 0.33 0.26 0.37 0.42 0.41 0.42 0.31 0.42 0.09 0.24 0.24 0.25 0.24 0.18 0.16";
pub const BAND_5_6_FINE_OPT_2: &str = "45.03 0.33 1.48 0.57 0.53 0.61 0.59 0.51 0.36 0.29 0.4 0.32 0.34 0.32 0.39 0.29 0.32 0.35 0.51 0.4 0.47 0.38 0.23 0.11 0.12 0.25 0.38 0.57 0 0.19 0.25 0.2 0.16 0.14 0.38 0.33 0.38 0.4 0.29 0.1 0.31 0.43 0.43 0.11 0.22 0.37 0.25 0.05 0.29 0.77 0.16 0.04 0.04";
pub const BAND_5_6_FINE_OPT_3: &str = "44.84 0.35 4.67 0.23 0.36 0.48 0.45 0.44 0.4 0.24 0.15 0.15 0.34 0.43 0.48 0.48 0.41 0.29 0.25 0.27 0.33 0.42 0.43 0.42 0.45 0.37 0.39 0.24 0.01 0.1 0.16 0.41 0.36 0.18 0.23 0.11 0.5 0.13 0.49 0.2 0.37 0.15 0.24 0.17 0.17 0.47 0.18 0.32 0.28 0.29 0.38 0.21 0.2";
pub const BAND_6_7_START_4: &str = "42 0.27 4.88 0.27 0.37 0.44 0.34 0.27 0.26 0.36 0.41 0.26 0.36 0.45 0.32 0.23 0.23 0.37 0.43 0.35 0.36 0.35 0.39 0.44 0.52 0.46 0.37 0.27 0 0.26 0.07 0.36 0.42 0.53 0.3 0.03 0.15 0.1 0.02 0.18 0.48 0.48 0.08 0.14 0.36 0.36 0.39 0.34 0.26 0.15 0.23 0.26 0.35";
pub const BAND_6_7_START_5: &str = "35.99 0.36 1.94 0.13 0.25 0.37 0.45 0.49 0.43 0.39 0.34 0.37 0.43 0.41 0.33 0.35 0.38 0.33 0.4 0.48 0.47 0.47 0.51 0.48 0.49 0.37 0.25 0.13 0 0.13 0.19 0.25 0.20 0.27 0.33 0.34 0.33 0.32 0.15 0.35 0.36 0.3 0.34 0.24 0.19 0.27 0.27 0.25 0.28 0.13 0.12 0.16 0.52";
pub const BAND_6_7_START_6: &str = "37.64 0.31 1.58 0.57 0.5 0.53 0.58 0.48 0.37 0.34 0.37 0.34 0.31 0.28 0.42 0.34 0.27 0.3 0.43 0.34 0.38 0.35 0.22 0.09 0.13 0.25 0.37 0.57 0 0.19 0.25 0.19 0.14 0.15 0.41 0.34 0.38 0.41 0.29 0.1 0.31 0.44 0.43 0.09 0.18 0.36 0.22 0.03 0.28 0.87 0.15 0.06 0.03";
pub const BAND_6_7_FINE_OPT_4: &str = "42.37 0.25 4.77 0.29 0.38 0.45 0.37 0.28 0.27 0.37 0.45 0.27 0.35 0.42 0.34 0.23 0.25 0.38 0.45 0.44 0.35 0.33 0.44 0.49 0.55 0.48 0.39 0.29 0 0.27 0.08 0.38 0.42 0.52 0.28 0.06 0.17 0.14 0.05 0.16 0.43 0.44 0.08 0.13 0.34 0.34 0.37 0.32 0.26 0.19 0.25 0.25 0.33";
pub const BAND_6_7_FINE_OPT_5: &str = "35.89 0.36 2.09 0.16 0.26 0.4 0.45 0.48 0.51 0.42 0.32 0.39 0.39 0.37 0.4 0.41 0.35 0.33 0.36 0.44 0.45 0.46 0.48 0.47 0.49 0.37 0.26 0.16 0 0.15 0.22 0.26 0.21 0.26 0.3 0.33 0.33 0.31 0.16 0.33 0.35 0.3 0.34 0.25 0.2 0.26 0.25 0.25 0.26 0.13 0.11 0.17 0.51";
pub const BAND_6_7_FINE_OPT_6: &str = "37.71 0.34 1.82 0.53 0.53 0.54 0.56 0.49 0.4 0.32 0.37 0.41 0.36 0.3 0.38 0.31 0.29 0.33 0.5 0.38 0.46 0.36 0.22 0.17 0.13 0.25 0.39 0.52 0.02 0.18 0.25 0.17 0.14 0.17 0.39 0.33 0.38 0.39 0.29 0.13 0.31 0.45 0.45 0.13 0.21 0.39 0.21 0.05 0.28 0.77 0.18 0.09 0.06";
