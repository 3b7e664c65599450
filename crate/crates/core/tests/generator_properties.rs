use netfit::generators::*;
use netfit::{validate, WeightMatrix};

fn revalidates(w: &WeightMatrix) {
    assert!(validate(w.as_array().clone()).is_ok());
}

#[test]
fn random_complete_is_uniform_and_seeded() {
    let a = random_complete(64, 11).unwrap();
    revalidates(&a);
    assert_eq!(a, random_complete(64, 11).unwrap());
    assert_ne!(a, random_complete(64, 12).unwrap());
    let mean = a.total_weight() / (64.0 * 63.0);
    assert!((0.45..=0.55).contains(&mean), "{mean}");
}

#[test]
fn scale_free_degree_statistics() {
    let mut means = Vec::new();
    let mut heavy = 0;
    for seed in 0..20 {
        let w = scale_free(128, 5.0, seed).unwrap();
        revalidates(&w);
        let deg = binary_degrees(&w);
        let mean = deg.iter().sum::<usize>() as f64 / 128.0;
        let max = *deg.iter().max().unwrap() as f64;
        assert!((mean - 5.0).abs() <= 1.0, "seed {seed}: mean degree {mean}");
        means.push(mean);
        if max > 3.0 * mean {
            heavy += 1;
        }
    }
    assert_eq!(heavy, 20, "max binary degree exceeded 3x mean in only {heavy}/20 seeds");
    assert_eq!(scale_free(128, 5.0, 3).unwrap(), scale_free(128, 5.0, 3).unwrap());
}

#[test]
fn modular_in_module_fraction() {
    for seed in 0..5 {
        let (w, modules) = modular(128, 8, 0.9, seed).unwrap();
        assert_eq!(modules, equal_modules(128, 8).unwrap());
        revalidates(&w);
        let (mut inside, mut total) = (0usize, 0usize);
        for i in 0..128 {
            for j in (i + 1)..128 {
                if w.get(i, j) > 0.0 {
                    total += 1;
                    if modules.module_of(i) == modules.module_of(j) {
                        inside += 1;
                    }
                }
            }
        }
        let frac = inside as f64 / total as f64;
        assert!((frac - 0.9).abs() <= 0.03, "seed {seed}: {frac}");
    }
}

#[test]
fn fully_in_module_is_block_diagonal() {
    let (w, modules) = modular(12, 3, 1.0, 4).unwrap();
    for i in 0..12 {
        for j in 0..12 {
            if modules.module_of(i) != modules.module_of(j) {
                assert_eq!(w.get(i, j), 0.0);
            }
        }
    }
    let spec = GeneratorSpec::modular(12, 3, 1.0, 4);
    let (g, m) = spec.generate().unwrap();
    assert_eq!(g, w);
    assert_eq!(m.unwrap(), modules);
}

#[test]
fn noise_normalizes_to_unit_max() {
    let w = random_complete(128, 1).unwrap();
    let noisy = add_noise(&w, 0.5, 2).unwrap();
    revalidates(&noisy);
    assert_eq!(noisy.max_entry(), 1.0);
    assert_eq!(noisy, add_noise(&w, 0.5, 2).unwrap());

    let scaled = validate(w.as_array() * 0.8 / w.max_entry()).unwrap();
    let same = add_noise(&scaled, 0.0, 3).unwrap();
    assert!(same.frobenius_distance(&validate(w.as_array() / w.max_entry()).unwrap()) < 1e-12);
    assert!(add_noise(&WeightMatrix::zeros(4), 0.0, 0).is_err());
}

#[test]
fn masks_hit_the_requested_fraction() {
    let m = random_mask(32, 0.2, 9).unwrap();
    assert_eq!(m.count_pairs(), (0.2f64 * 496.0).round() as usize);
    assert_eq!(m, random_mask(32, 0.2, 9).unwrap());
    assert!(random_mask(32, 1.5, 0).is_err());
}

#[test]
fn derived_seeds_separate_streams() {
    assert_ne!(derive_seed(1, &[0, 0]), derive_seed(1, &[0, 1]));
    assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    assert_eq!(derive_seed(5, &[2, 3, 4]), derive_seed(5, &[2, 3, 4]));
}
