use super::forward::predict;
use super::layers::select_support;
use super::params::NetworkParams;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Averages the softmax rows of every model over a batch of inputs and picks
/// the `k` most probable devices per row.
pub fn ensemble_predict<F: Scalar>(
    models: &[NetworkParams<F>],
    inputs: &[F],
    k: usize,
) -> Result<(Vec<F>, Vec<Vec<usize>>)> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidEnsemble("no models given".into()))?;
    if models.iter().any(|m| m.shape != first.shape) {
        return Err(Error::InvalidEnsemble("models disagree on shape".into()));
    }
    let mut avg = predict(first, inputs)?;
    for model in &models[1..] {
        for (a, p) in avg.iter_mut().zip(predict(model, inputs)?) {
            *a = *a + p;
        }
    }
    let scale = F::one() / F::of(models.len() as f64);
    avg.iter_mut().for_each(|v| *v = *v * scale);
    let supports = avg
        .chunks_exact(first.shape.outputs)
        .map(|row| select_support(row, k))
        .collect::<Result<_>>()?;
    Ok((avg, supports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::daud_net::forward::predict;
    use crate::daud_net::params::NetworkShape;
    use crate::rng::stream;
    use rand::Rng;

    fn inputs() -> Vec<f64> {
        let mut rng = stream(7, 7);
        (0..5 * 4).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn single_and_duplicated_models_match_plain_prediction() {
        let shape = NetworkShape::new(4, 6, 2, 5).unwrap();
        let model: NetworkParams<f64> = NetworkParams::init(shape, &mut stream(1, 1));
        let x = inputs();
        let single = predict(&model, &x).unwrap();
        let (one, _) = ensemble_predict(std::slice::from_ref(&model), &x, 2).unwrap();
        assert_eq!(one, single);
        let (three, _) = ensemble_predict(&[model.clone(), model.clone(), model], &x, 2).unwrap();
        for (a, b) in three.iter().zip(&single) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn averaged_rows_stay_on_the_simplex() {
        let shape = NetworkShape::new(4, 6, 2, 5).unwrap();
        let models: Vec<NetworkParams<f64>> = (0..3)
            .map(|s| NetworkParams::init(shape, &mut stream(s, 1)))
            .collect();
        let (avg, supports) = ensemble_predict(&models, &inputs(), 2).unwrap();
        for row in avg.chunks(5) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
        assert!(supports.iter().all(|s| s.len() == 2));
    }

    #[test]
    fn mismatched_or_empty_ensembles_are_rejected() {
        let a: NetworkParams<f64> = NetworkParams::init(NetworkShape::new(4, 6, 2, 5).unwrap(), &mut stream(1, 1));
        let b: NetworkParams<f64> = NetworkParams::init(NetworkShape::new(4, 6, 1, 5).unwrap(), &mut stream(1, 1));
        assert!(matches!(ensemble_predict(&[a, b], &inputs(), 2), Err(Error::InvalidEnsemble(_))));
        assert!(matches!(
            ensemble_predict::<f64>(&[], &inputs(), 2),
            Err(Error::InvalidEnsemble(_))
        ));
    }
}
