pub mod textprep;
pub mod embed;
pub mod featurize;
pub mod lexicon;
pub mod sparse;
pub mod dataset;
pub mod evaluate;
pub mod regress;
pub mod pipeline;
