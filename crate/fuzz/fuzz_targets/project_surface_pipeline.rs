#![no_main]

use libfuzzer_sys::fuzz_target;
use monoproj::gp::kron::detect_lattice;
use monoproj::proj2d::{is_bimonotone, project_surface};
use monoproj::SurfaceGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = monoproj::io::parse_dataset(data) else {
        return;
    };
    if ds.dim() != 2 || ds.len() > 256 {
        return;
    }
    let Some(layout) = detect_lattice(&ds.xs) else {
        return;
    };
    let values = layout.gather(&ds.y);
    let Ok(grid) = SurfaceGrid::new(layout.axes[0].clone(), layout.axes[1].clone(), values)
    else {
        return;
    };
    let Ok(report) = project_surface(&grid, 1e-8, 50) else {
        return;
    };
    if report.converged {
        let (ok, violation) = is_bimonotone(&report.result, 1e-8);
        assert!(ok, "converged projection violates monotonicity by {violation}");
    }
});
