// Train RBF and linear SVMs on XOR, then save and reload the RBF model.

use cmcgrasp::svm::{train_smo, KernelSpec, Sample, SmoParams, SvmModel};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pts = [([0.0, 0.0], -1), ([1.0, 1.0], -1), ([0.0, 1.0], 1), ([1.0, 0.0], 1)];
    let samples = pts
        .iter()
        .map(|(x, y)| Sample::new(x.to_vec(), *y))
        .collect::<Result<Vec<_>, _>>()?;
    let params = SmoParams { c: 10.0, ..SmoParams::default() };
    for kernel in [KernelSpec::Rbf { gamma: 1.0 }, KernelSpec::Linear] {
        let t = train_smo(&samples, kernel, &params)?;
        let correct = samples
            .iter()
            .filter(|s| t.model.predict(&s.features).is_ok_and(|p| p == s.label))
            .count();
        println!("{kernel:?}: {correct}/4 correct, {} passes, dual {:.4}", t.passes, t.objective);
        if let KernelSpec::Rbf { .. } = kernel {
            let back = SvmModel::from_json(&t.model.to_json())?;
            assert_eq!(back, t.model);
        }
    }
    Ok(())
}
