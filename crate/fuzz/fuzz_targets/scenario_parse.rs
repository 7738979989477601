#![no_main]

use libfuzzer_sys::fuzz_target;
use planarpose::scenario::ScenarioFile;
use planarpose::simulation::synth_observations;

// Scenario documents are untrusted input: parsing, semantic validation,
// and the first solve steps must never panic.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = ScenarioFile::parse_str(text) else {
        return;
    };
    let Ok(loaded) = file.resolve() else {
        return;
    };
    let scenario = &loaded.scenario;
    let _ = synth_observations(scenario);
    if let Some(obs) = &loaded.observations {
        let _ = planarpose::p4p::solve_p4p(&scenario.target, obs, &scenario.intrinsics);
    }
});
