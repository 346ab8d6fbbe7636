#![no_main]

use libfuzzer_sys::fuzz_target;
use monoproj::pava::{pava_project, sup_distance};
use monoproj::GridFunction;

// parse -> project: any dataset the parser accepts must project without
// panicking, and the result must be non-decreasing
fuzz_target!(|data: &[u8]| {
    let Ok(ds) = monoproj::io::parse_dataset(data) else {
        return;
    };
    if ds.dim() != 1 {
        return;
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by(|&a, &b| ds.xs[a][0].partial_cmp(&ds.xs[b][0]).unwrap());
    let points: Vec<f64> = order.iter().map(|&i| ds.xs[i][0]).collect();
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return;
    }
    let values: Vec<f64> = order.iter().map(|&i| ds.y[i]).collect();
    let f = match &ds.weights {
        Some(w) => {
            let w: Vec<f64> = order.iter().map(|&i| w[i]).collect();
            GridFunction::with_weights(points, values, w)
        }
        None => GridFunction::new(points, values),
    };
    let Ok(f) = f else { return };
    let p = pava_project(&f);
    assert!(p.values().windows(2).all(|w| w[0] <= w[1]));
    // projecting twice is a fixed point
    let again = pava_project(p.as_grid());
    assert_eq!(sup_distance(p.as_grid(), again.as_grid()).unwrap(), 0.0);
});
