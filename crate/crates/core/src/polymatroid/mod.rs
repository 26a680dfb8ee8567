//! Set functions on a finite ground set and the linear functionals used to
//! test them.

mod functional;
mod kr;
mod profile;

pub use functional::{eval_functional, parse_functional, LinFunctional};
pub use kr::{
    dfz_family, gmm_check, kr_closed_form, kr_violation, scan_threshold, GmmReport, KrClosedForm,
    ScanResult, KR_FUNCTIONALS,
};
pub use profile::{
    convolve, delta_ci, delta_cond, factor, first_violation, ingleton, is_modular,
    is_polymatroid, label_index, label_table, labels_mask, parse_subset, subset_label, Mask,
    Partition, Profile, Violation, MAX_GROUND,
};
pub(crate) use profile::{check_ground, ground_from_json};
