pub mod analysis;
pub mod learn;
pub mod synth;
pub mod verify;

use crate::cli::Command;
use crate::error::Result;

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth::run(a),
        Command::Spectra(a) => analysis::run_spectra(a),
        Command::FlattenExperiment(a) => analysis::run_flatten(a),
        Command::Verify(a) => verify::run(a),
        Command::Train(a) => learn::run_train(a),
        Command::Evaluate(a) => learn::run_evaluate(a),
        Command::Cv(a) => learn::run_cv(a),
        Command::ExportFilter(a) => learn::run_export_filter(a),
        Command::NodeVariance(a) => analysis::run_node_variance(a),
    }
}
