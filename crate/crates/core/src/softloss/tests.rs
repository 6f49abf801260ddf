use super::*;
use crate::metrics::{cl_dice, cl_x_dice, VariantSpec};
use crate::morphology::{build_bundle, paired_bundles, Normalization};
use crate::phantoms::{generate, translate, PhantomSpec};

fn tube(r: f64) -> BinaryField {
    generate(&PhantomSpec::tube(&[48, 24], r, 30.0)).unwrap()
}

#[test]
fn prob_field_validation() {
    let shape = GridShape::plane(2, 2);
    assert!(ProbField::new(shape.clone(), vec![0.0, 0.5, 1.0, 1.5]).is_err());
    assert!(ProbField::new(shape.clone(), vec![0.0, 0.5, 1.0]).is_err());
    assert!(ProbField::clamped(shape.clone(), vec![f64::NAN, 0.0, 0.0, 0.0]).is_err());
    let p = ProbField::clamped(shape, vec![-1.0, 0.25, 0.5, 2.0]).unwrap();
    assert_eq!(p.values(), &[0.0, 0.25, 0.5, 1.0]);
    assert_eq!(p.threshold(0.5).values(), &[0, 0, 1, 1]);
}

#[test]
fn soft_dice_examples() {
    let l = tube(3.0);
    let hard = ProbField::from_mask(&l);
    assert_eq!(soft_dice_loss(&hard, &l).unwrap(), 0.0);
    assert_eq!(soft_dice_loss(&ProbField::zeros(l.shape().clone()), &l).unwrap(), 1.0);
    let half = ProbField::new(l.shape().clone(), l.values().iter().map(|&v| 0.5 * v as f64).collect()).unwrap();
    assert!((soft_dice_loss(&half, &l).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    let empty = BinaryField::zeros(l.shape().clone());
    assert_eq!(soft_dice_loss(&ProbField::zeros(l.shape().clone()), &empty).unwrap(), 0.0);
}

#[test]
fn soft_cl_x_examples() {
    let l = tube(3.0);
    let lb = build_bundle(&l, None).unwrap();
    let hard = ProbField::from_mask(&l);
    for name in ["clDice", "cl-S-D", "cl-M-D", "cl-MS-D", "cl-MI-D", "cl-MSN-D", "cbDice"] {
        let v = VariantSpec::parse(name, 2).unwrap();
        let loss = soft_cl_x_loss(&v, &hard, &l, &lb).unwrap();
        assert!(loss.abs() < 1e-6, "{name}: {loss}");
        let zero = soft_cl_x_loss(&v, &ProbField::zeros(l.shape().clone()), &l, &lb).unwrap();
        assert_eq!(zero, 1.0, "{name}");
    }
}

#[test]
fn soft_cl_d_matches_hard_on_translated_tubes() {
    let l = tube(3.0);
    let lb = build_bundle(&l, None).unwrap();
    let v = VariantSpec::parse("clDice", 2).unwrap();
    for t in 0..=4 {
        let p = translate(&l, &[0, t]).unwrap();
        let soft = soft_cl_x_loss(&v, &ProbField::from_mask(&p), &l, &lb).unwrap();
        let (pb, _) = paired_bundles(&p, &l, Normalization::PerMask).unwrap();
        let hard = cl_dice(&pb, &lb).unwrap();
        assert!((soft - (1.0 - hard)).abs() < 1e-6, "t={t}: {soft} vs {}", 1.0 - hard);
    }
}

#[test]
fn hard_soft_agreement_on_tubes() {
    for r in [2.0, 3.0, 4.0] {
        let l = tube(r);
        let lb = build_bundle(&l, None).unwrap();
        for t in 0..(r as isize) {
            let p = translate(&l, &[0, t]).unwrap();
            let (pb, _) = paired_bundles(&p, &l, Normalization::PerMask).unwrap();
            for name in ["clDice", "cl-S-D", "cl-M-D", "cbDice"] {
                let v = VariantSpec::parse(name, 2).unwrap();
                let soft = SoftClX::new(&v, &lb, Some(r as usize)).unwrap().value(&ProbField::from_mask(&p)).unwrap();
                let hard = cl_x_dice(&v, &pb, &lb).unwrap();
                assert!((soft - (1.0 - hard)).abs() <= 1e-3, "r={r} t={t} {name}: {soft} vs {}", 1.0 - hard);
            }
        }
    }
}

#[test]
fn default_iterations_follow_reference_radius() {
    let l = tube(3.0);
    let lb = build_bundle(&l, None).unwrap();
    let v = VariantSpec::parse("cbDice", 2).unwrap();
    assert_eq!(SoftClX::new(&v, &lb, None).unwrap().iters(), 3);
    assert!(SoftClX::new(&v, &lb, Some(0)).is_err());
    assert!(SoftClX::new(&VariantSpec::parse("cbDice", 3).unwrap(), &lb, None).is_err());
}

#[test]
fn combined_coefficients() {
    let (p, l) = random_instance(&[8, 8], 3).unwrap();
    let cb = VariantSpec::parse("cbDice", 2).unwrap();
    let ce = cross_entropy(&p, &l).unwrap();
    let dice = soft_dice_loss(&p, &l).unwrap();
    let x = soft_cl_x_loss(&cb, &p, &l, &build_bundle(&l, None).unwrap()).unwrap();

    let pure = combined_loss(&CombinedLossSpec::new(0.0, 0.0, Some(cb.clone())), &p, &l).unwrap();
    assert_eq!(pure, 0.5 * ce);
    let both = combined_loss(&CombinedLossSpec::new(1.0, 1.0, Some(cb.clone())), &p, &l).unwrap();
    assert!((both - (0.5 * ce + 0.25 * dice + 0.25 * x)).abs() < 1e-12);
    let spec = CombinedLossSpec::new(1.0, 3.0, Some(cb));
    assert_eq!(spec.weights().unwrap(), [0.5, 0.125, 0.375]);

    let hard = ProbField::from_mask(&l);
    let only_dice = combined_loss(&CombinedLossSpec::new(1.0, 0.0, None), &hard, &l).unwrap();
    assert_eq!(only_dice, 0.5 * cross_entropy(&hard, &l).unwrap());
    assert!(CombinedLossSpec::new(1.0, 1.0, None).weights().is_err());
    assert!(CombinedLossSpec::new(-1.0, 1.0, None).weights().is_err());
}

#[test]
fn cross_entropy_clamps() {
    let l = BinaryField::from_bools(GridShape::plane(2, 1), &[true, false]).unwrap();
    let p = ProbField::new(l.shape().clone(), vec![1.0, 0.0]).unwrap();
    let v = cross_entropy(&p, &l).unwrap();
    assert!((v - -(1.0f64 - 1e-7).ln()).abs() < 1e-15);
    let q = ProbField::new(l.shape().clone(), vec![0.0, 1.0]).unwrap();
    assert!((cross_entropy(&q, &l).unwrap() - -(1e-7f64).ln()).abs() < 1e-9);
}

#[test]
fn gradients_match_differences() {
    // where every radius is 1 the distance weights equal the masks and some
    // losses are locally flat, so only most instances carry a gradient
    let mut live = [0usize; 6];
    for seed in 0..4 {
        for dims in [&[8usize, 8][..], &[6, 6, 6]] {
            let (p, l) = random_instance(dims, seed).unwrap();
            let d = dims.len();
            let lb = build_bundle(&l, None).unwrap();
            let losses: Vec<Box<dyn SoftLoss>> = vec![
                Box::new(SoftDice::new(&l)),
                Box::new(CrossEntropy::new(&l)),
                Box::new(SoftClX::new(&VariantSpec::parse("clDice", d).unwrap(), &lb, None).unwrap()),
                Box::new(SoftClX::new(&VariantSpec::parse("cl-MS-D", d).unwrap(), &lb, None).unwrap()),
                Box::new(SoftClX::new(&VariantSpec::parse("cbDice", d).unwrap(), &lb, None).unwrap()),
                Box::new(
                    CombinedLoss::new(&CombinedLossSpec::new(1.0, 1.0, Some(VariantSpec::parse("cbDice", d).unwrap())), &l)
                        .unwrap(),
                ),
            ];
            for (k, loss) in losses.iter().enumerate() {
                let g = grad_check(loss.as_ref(), &p, 1e-4, None).unwrap();
                let (_, grad) = loss.value_and_grad(&p).unwrap();
                live[k] += grad.iter().any(|&x| x.abs() > 1e-6) as usize;
                assert!(g.max_rel_error < 1e-3, "seed {seed} dims {dims:?} loss {k}: {g:?}");
            }
        }
    }
    assert!(live.iter().all(|&n| n >= 6), "{live:?}");
}

#[test]
fn flat_region_has_zero_gradient() {
    // with an empty reference any nonzero p scores soft Dice 0, a plateau
    let shape = GridShape::plane(8, 8);
    let loss = SoftDice::new(&BinaryField::zeros(shape.clone()));
    let p = ProbField::zeros(shape).with_value(5, 0.2);
    let (v, g) = loss.value_and_grad(&p).unwrap();
    assert_eq!(v, 1.0);
    assert!(g.iter().all(|&x| x == 0.0));
    let probe = grad_check(&loss, &p, 1e-4, Some(&[5])).unwrap();
    assert_eq!((probe.analytic, probe.numeric, probe.max_rel_error), (0.0, 0.0, 0.0));
}

#[test]
fn grad_check_rejects_boundary_probes() {
    let (p, l) = random_instance(&[6, 6], 0).unwrap();
    let hard = ProbField::from_mask(&l);
    assert!(grad_check(&SoftDice::new(&l), &hard, 1e-4, None).is_err());
    assert!(grad_check(&SoftDice::new(&l), &p, 0.0, None).is_err());
}

#[test]
fn instances_are_seeded() {
    assert_eq!(random_instance(&[8, 8], 7).unwrap(), random_instance(&[8, 8], 7).unwrap());
    assert_ne!(random_instance(&[8, 8], 7).unwrap().0, random_instance(&[8, 8], 8).unwrap().0);
}
