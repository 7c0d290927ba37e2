use lrnmt::corpus::MonoCorpus;
use lrnmt::subword::{train_subword, TrainOptions};
use lrnmt::synth::{generate_family, FamilySpec};

fn main() {
    for seed in [7u64, 42, 123] {
        let spec = FamilySpec::harness(seed, 8);
        let data = generate_family(&spec).unwrap();
        let segs: Vec<String> = data.base_train.pairs.iter().map(|(s, _)| s.clone()).collect();
        let mono = MonoCorpus::new(spec.base_lang.clone(), segs);
        let (model, _) = train_subword(&[&mono], &TrainOptions::new(100_000)).unwrap();
        println!("seed {seed}: exhaustion capacity = {}", model.learned_ops());
    }
}
