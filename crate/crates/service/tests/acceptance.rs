//! End-to-end checks of the composer, its encodings, the CLI and the service.
//! Prints one PASS or FAIL line per criterion and exits non-zero on any FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use common::oracle::{melody_score, oracle_best, oracle_r};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use versetune::corpus::{compose_in_keys, load_corpus, load_lyrics};
use versetune::eval::{
    average_interval, best_key, correlation, direction_change_rate, pitch_class_distribution, rhythm_match, step_ratio,
};
use versetune::image::{request_lyrics, LengthPreference, LyricsRequest, StubProvider};
use versetune::midi::{read_midi, to_midi, TICKS_PER_QUARTER};
use versetune::musicxml::parse_musicxml;
use versetune::rhythm::strong_beat_positions;
use versetune::{compose, ComposeOptions, Composition, KeyChoice, KeySignature, Mode, Pitch, SamplerConfig, KEY_CATALOG};

const BIN: &str = env!("CARGO_BIN_EXE_versetune");
const SUITE_SIZE: usize = 200;
const PNG: &[u8] = b"\x89PNG\r\n\x1a\n\0\0\0\rIHDR";

type Outcome = Result<String, String>;

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn versetune() -> Command {
    let mut cmd = Command::new(BIN);
    for var in ["VERSETUNE_LLM_API_KEY", "VERSETUNE_LLM_MODEL", "VERSETUNE_LLM_STUB"] {
        cmd.env_remove(var);
    }
    // A dead endpoint makes any attempt to reach a real provider fail loudly.
    cmd.env("VERSETUNE_LLM_ENDPOINT", "http://127.0.0.1:9/v1/chat/completions");
    cmd
}

fn run(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| format!("cannot run {BIN}: {e}"))?;
    if !out.status.success() {
        return Err(format!("{:?} exited with {}: {}", cmd, out.status, String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn field<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    line.split_whitespace().find_map(|kv| kv.strip_prefix(name)?.strip_prefix('='))
}

fn read(path: &str) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("cannot read {path}: {e}"))
}

/// Runs `generate` twice into separate directories and returns the slowest
/// run when both produce the same MusicXML and MIDI bytes.
fn generate_twice(work: &Path, input: &[&str]) -> Result<Duration, String> {
    let mut artifacts = Vec::new();
    let mut slowest = Duration::ZERO;
    for run_index in 0..2 {
        let out = work.join(format!("run{run_index}"));
        let started = Instant::now();
        let stdout = run(versetune().arg("generate").args(input).args(["--seed", "7", "--out"]).arg(&out))?;
        slowest = slowest.max(started.elapsed());
        let xml = field(&stdout, "musicxml").ok_or("no musicxml= in output")?;
        let midi = field(&stdout, "midi").ok_or("no midi= in output")?;
        artifacts.push((read(xml)?, read(midi)?));
    }
    if artifacts[0].0 != artifacts[1].0 {
        return Err("MusicXML differs between runs".into());
    }
    if artifacts[0].1 != artifacts[1].1 {
        return Err("MIDI differs between runs".into());
    }
    Ok(slowest)
}

fn determinism(work: &Path) -> Outcome {
    std::fs::create_dir_all(work).map_err(|e| e.to_string())?;
    let lyrics = work.join("lyrics.txt");
    std::fs::write(&lyrics, "Birds are flying in the sky,\nsinging songs of joy and light.\n").map_err(|e| e.to_string())?;
    let lyrics = lyrics.to_string_lossy().into_owned();
    let mut worst = Duration::ZERO;
    for key in ["random", "D major"] {
        let dir = work.join(key.replace(' ', "-"));
        worst = worst.max(generate_twice(&dir, &["--lyrics", &lyrics, "--key", key])?);
    }
    if worst >= Duration::from_secs(1) {
        return Err(format!("slowest song took {worst:?}"));
    }
    Ok(format!("byte-identical MusicXML and MIDI, slowest run {} ms", worst.as_millis()))
}

/// The property suite: random lyrics, random seeds, random or fixed keys.
struct Suite {
    songs: Vec<Composition>,
}

impl Suite {
    fn build() -> Result<Suite, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut songs = Vec::with_capacity(SUITE_SIZE);
        for _ in 0..SUITE_SIZE {
            let text = common::random_lyric(rng.gen());
            let key = if rng.gen_bool(0.5) { KeyChoice::Random } else { KeyChoice::Fixed(KEY_CATALOG[rng.gen_range(0..KEY_CATALOG.len())]) };
            let opts = ComposeOptions { key, seed: rng.gen(), ..Default::default() };
            songs.push(compose(&text, &opts).map_err(|e| format!("{text:?}: {e}"))?);
        }
        Ok(Suite { songs })
    }
}

fn structural_invariants(suite: &Suite) -> Outcome {
    let sampler = SamplerConfig::default();
    let failing: Vec<String> = suite
        .songs
        .iter()
        .filter_map(|song| {
            let v = common::structural_violations(song, &sampler);
            (!v.is_empty()).then(|| v.join("; "))
        })
        .collect();
    match failing.first() {
        None => Ok(format!("{} of {} songs satisfy every invariant", suite.songs.len(), suite.songs.len())),
        Some(first) => Err(format!("{} songs fail, first: {first}", failing.len())),
    }
}

fn keyword_alignment(suite: &Suite) -> Outcome {
    let (mut strong, mut keyed, mut missed_constructible) = (0, 0, 0);
    for song in &suite.songs {
        let (s, k) = common::keyword_alignment(song);
        strong += s;
        keyed += k;
        let slots = strong_beat_positions(song.score.time_signature).map_err(|e| e.to_string())?.len() * song.score.measures.len();
        if k <= slots && s < k {
            missed_constructible += 1;
        }
    }
    let rate = if keyed == 0 { 1.0 } else { strong as f64 / keyed as f64 };
    let detail = format!("{strong}/{keyed} keyword syllables on strong beats ({:.2}%)", rate * 100.0);
    if rate < 0.90 {
        Err(format!("{detail}, below 90%"))
    } else if missed_constructible > 0 {
        Err(format!("{detail}, {missed_constructible} songs with enough strong beats missed some"))
    } else {
        Ok(detail)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

struct Desk {
    songs: Vec<Composition>,
    elapsed: Duration,
}

impl Desk {
    fn build() -> Result<Desk, String> {
        let lyrics = load_lyrics(&core_dir().join("tests/fixtures/desk_corpus")).map_err(|e| e.to_string())?;
        if lyrics.len() != 20 {
            return Err(format!("expected 20 desk lyrics, found {}", lyrics.len()));
        }
        let started = Instant::now();
        let keyed = compose_in_keys(&lyrics, 3, 0, &SamplerConfig::default());
        let elapsed = started.elapsed();
        let songs = keyed
            .into_iter()
            .map(|k| k.result.map_err(|e| format!("{} in {}: {e}", k.name, k.key)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Desk { songs, elapsed })
    }

    fn metric(&self, f: impl Fn(&versetune::EvaluationReport) -> Option<f64>) -> Result<Vec<f64>, String> {
        self.songs.iter().map(|s| s.report.as_ref().and_then(&f).ok_or_else(|| format!("{} has no value", s.score.title))).collect()
    }
}

fn key_confidence(desk: &Desk) -> Outcome {
    if desk.songs.len() != 60 {
        return Err(format!("expected 60 songs, composed {}", desk.songs.len()));
    }
    let mut r = desk.metric(|rep| Some(rep.key_confidence))?;
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let med = median(&mut r);
    let detail = format!("60 songs, median {med:.4}, mean {mean:.4}, {} ms", desk.elapsed.as_millis());
    if med >= 0.78 && mean >= 0.80 && desk.elapsed < Duration::from_secs(30) {
        Ok(detail)
    } else {
        Err(format!("{detail}; need median >= 0.78, mean >= 0.80, under 30 s"))
    }
}

fn smoothness(desk: &Desk) -> Outcome {
    let interval = median(&mut desk.metric(|r| r.average_interval)?);
    let steps = median(&mut desk.metric(|r| r.step_ratio)?);
    let turns = median(&mut desk.metric(|r| r.direction_change_rate)?);
    let detail = format!("median average interval {interval:.4}, step ratio {steps:.4}, direction change rate {turns:.4}");
    if interval <= 3.0 && steps >= 0.50 && (0.40..=0.70).contains(&turns) {
        Ok(detail)
    } else {
        Err(format!("{detail}; need <= 3.0, >= 0.50 and within [0.40, 0.70]"))
    }
}

fn random_melody(rng: &mut ChaCha8Rng, len: std::ops::RangeInclusive<usize>) -> Vec<(u8, i64)> {
    let n = rng.gen_range(len);
    (0..n).map(|_| (rng.gen_range(48..=84), rng.gen_range(1..=4))).collect()
}

fn tabulated_values() -> Result<(), String> {
    let p = |v: &[u8]| v.iter().copied().map(Pitch).collect::<Vec<_>>();
    // Hand-computed: |d| means, step shares of nonzero moves, sign changes over interior notes.
    let cases: [(&str, Result<f64, versetune::Error>, f64); 6] = [
        ("average_interval [60,60,60]", average_interval(&p(&[60, 60, 60])), 0.0),
        ("average_interval [60,62,64]", average_interval(&p(&[60, 62, 64])), 2.0),
        ("step_ratio [60,62,64]", step_ratio(&p(&[60, 62, 64])), 1.0),
        ("step_ratio [60,67]", step_ratio(&p(&[60, 67])), 0.0),
        ("direction_change_rate [60,62,64,65,67]", direction_change_rate(&p(&[60, 62, 64, 65, 67])), 0.0),
        ("direction_change_rate [60,62,60,62]", direction_change_rate(&p(&[60, 62, 60, 62])), 1.0),
    ];
    for (name, got, want) in cases {
        match got {
            Ok(v) if v == want => {}
            other => return Err(format!("{name}: got {other:?}, want {want}")),
        }
    }
    Ok(())
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let notes = random_melody(&mut rng, 1..=8);
        let x = pitch_class_distribution(&melody_score(&notes)).map_err(|e| e.to_string())?;
        for tonic in 0..12u8 {
            for (mode, minor) in [(Mode::Major, false), (Mode::Minor, true)] {
                let r = correlation(&x, KeySignature { tonic, mode }).map_err(|e| e.to_string())?;
                worst = worst.max((r - oracle_r(&notes, usize::from(tonic), minor)).abs());
            }
        }
        let (key, r) = best_key(&x).map_err(|e| e.to_string())?;
        let (oracle_key, oracle) = oracle_best(&notes);
        worst = worst.max((r - oracle).abs());
        if key != oracle_key {
            return Err(format!("melody {case} {notes:?}: best key {key}, oracle {oracle_key}"));
        }
    }
    if worst > 1e-12 {
        return Err(format!("largest correlation difference {worst:e} exceeds 1e-12"));
    }
    tabulated_values()?;
    Ok(format!("50 melodies x 24 keys, largest difference {worst:e}; 6 tabulated smoothness values exact"))
}

fn transposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut ties = 0;
    for case in 0..50 {
        let t: i32 = rng.gen_range(1..=11);
        let notes = random_melody(&mut rng, 1..=12);
        let shifted: Vec<(u8, i64)> = notes.iter().map(|&(m, d)| ((i32::from(m) + t) as u8, d)).collect();
        let x = pitch_class_distribution(&melody_score(&notes)).map_err(|e| e.to_string())?;
        let y = pitch_class_distribution(&melody_score(&shifted)).map_err(|e| e.to_string())?;
        let (k0, r0) = best_key(&x).map_err(|e| e.to_string())?;
        let (k1, r1) = best_key(&y).map_err(|e| e.to_string())?;
        worst = worst.max((r1 - r0).abs());
        let shift = |k: KeySignature| KeySignature { tonic: ((i32::from(k.tonic) + t).rem_euclid(12)) as u8, mode: k.mode };
        // Tied maxima are broken by tonic order, which transposition does not
        // preserve; the winner must still be one of the shifted leaders.
        let leaders: Vec<KeySignature> =
            KeySignature::all().filter(|k| (correlation(&x, *k).unwrap() - r0).abs() <= 1e-12).map(shift).collect();
        if leaders.len() > 1 {
            ties += 1;
        }
        let expected_ok = if leaders.len() == 1 { k1 == shift(k0) } else { leaders.contains(&k1) };
        if !expected_ok {
            return Err(format!("melody {case} shifted by {t}: {k0} became {k1}, expected {}", shift(k0)));
        }
    }
    if worst > 1e-12 {
        return Err(format!("largest |r - r_original| {worst:e} exceeds 1e-12"));
    }
    Ok(format!("50 melodies, tonic shifted by t in every case ({ties} tied), largest |dr| {worst:e}"))
}

fn serialization(suite: &Suite, desk: &Desk, work: &Path) -> Outcome {
    let dir = work.join("xml");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (i, song) in suite.songs.iter().chain(&desk.songs).enumerate() {
        let xml = song.musicxml();
        let parsed = parse_musicxml(&xml).map_err(|e| format!("song {i}: {e}"))?;
        if parsed != song.score {
            return Err(format!("song {i} changed across emit and parse"));
        }
        let bytes = to_midi(&song.score, 100).map_err(|e| e.to_string())?;
        let midi = read_midi(&bytes).map_err(|e| e.to_string())?;
        let ticks = song.score.total_duration() * i64::from(TICKS_PER_QUARTER);
        if !ticks.is_integer() || i64::from(midi.total_ticks) != ticks.to_integer() {
            return Err(format!("song {i}: {} MIDI ticks for {ticks} expected", midi.total_ticks));
        }
        let path = dir.join(format!("{i:03}.musicxml"));
        std::fs::write(&path, xml).map_err(|e| e.to_string())?;
        files.push(path);
    }
    let script = core_dir().join("tests/schema/validate.py");
    let out = Command::new("python3")
        .arg(&script)
        .args(&files)
        .output()
        .map_err(|e| format!("schema check not run, python3 unavailable: {e}"))?;
    let report = String::from_utf8_lossy(&out.stdout);
    let summary = report.lines().last().unwrap_or("").to_string();
    if !out.status.success() {
        let first = report.lines().next().unwrap_or("");
        return Err(format!("schema validation failed: {first} {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(format!("{} scores round-trip and match their MIDI length; schema: {summary}", files.len()))
}

fn rhythm_identity_and_compare(suite: &Suite, desk: &Desk) -> Outcome {
    for (i, song) in suite.songs.iter().chain(&desk.songs).enumerate() {
        let m = rhythm_match(&song.score, &song.score).map_err(|e| format!("song {i}: {e}"))?;
        if m.all != 1.0 || m.keywords.is_some_and(|k| k != 1.0) {
            return Err(format!("song {i}: rhythm_match with itself is {m:?}"));
        }
    }
    let originals_dir = core_dir().join("tests/fixtures/originals");
    let originals = load_corpus(&originals_dir).map_err(|e| e.to_string())?;
    let table = run(versetune().arg("compare").arg("--originals").arg(&originals_dir).args(["--regenerate", "3"]))?;
    let rows: Vec<Vec<&str>> = table.lines().skip(1).take_while(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect();
    for (_, original) in &originals {
        let mine: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] == original.title).collect();
        if mine.len() != 3 {
            return Err(format!("{}: {} variants, expected 3", original.title, mine.len()));
        }
        if !mine.iter().any(|r| r[2] == original.key.to_string()) {
            return Err(format!("{}: no variant in {}", original.title, original.key));
        }
    }
    Ok(format!(
        "rhythm_match(s, s) = 1 on {} songs; compare --regenerate 3 keeps the reference key for {} originals",
        suite.songs.len() + desk.songs.len(),
        originals.len()
    ))
}

fn offline_image(work: &Path) -> Outcome {
    std::fs::create_dir_all(work).map_err(|e| e.to_string())?;
    let image = work.join("photo.png");
    std::fs::write(&image, PNG).map_err(|e| e.to_string())?;
    let image = image.to_string_lossy().into_owned();
    let slowest = {
        let mut worst = Duration::ZERO;
        for (i, key) in ["random", "G major"].into_iter().enumerate() {
            let dir = work.join(format!("image{i}"));
            worst = worst.max(generate_twice(&dir, &["--image", &image, "--stub", "--key", key])?);
        }
        worst
    };
    if slowest >= Duration::from_secs(1) {
        return Err(format!("slowest image song took {slowest:?}"));
    }
    let request = LyricsRequest::new(PNG.to_vec(), LengthPreference::Medium, None).map_err(|e| e.to_string())?;
    let lyrics = request_lyrics(&request, &StubProvider).map_err(|e| e.to_string())?.lyrics;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let song = compose(&lyrics, &ComposeOptions { seed: rng.gen(), ..Default::default() }).map_err(|e| e.to_string())?;
        let v = common::structural_violations(&song, &SamplerConfig::default());
        if !v.is_empty() {
            return Err(v.join("; "));
        }
    }
    Ok(format!("stub lyrics composed offline, deterministic CLI output ({} ms), invariants hold on 20 seeds", slowest.as_millis()))
}

/// A `serve` child that is killed when dropped.
struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(store: &Path) -> Result<Server, String> {
        let mut child = versetune()
            .args(["serve", "--addr", "127.0.0.1:0", "--store"])
            .arg(store)
            .stderr(Stdio::piped())
            .stdout(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot start serve: {e}"))?;
        let stderr = child.stderr.take().ok_or("no stderr")?;
        let mut lines = BufReader::new(stderr).lines();
        let base = loop {
            match lines.next() {
                Some(Ok(line)) => {
                    if let Some(url) = line.split_whitespace().find(|w| w.starts_with("http://")) {
                        break url.to_string();
                    }
                }
                _ => {
                    let _ = child.kill();
                    return Err("serve exited before listening".into());
                }
            }
        };
        // Keep draining stderr so the child never blocks on a full pipe.
        std::thread::spawn(move || lines.for_each(drop));
        Ok(Server { child, base })
    }

    fn get(&self, path: &str) -> Result<Vec<u8>, String> {
        let response = ureq::get(&format!("{}{path}", self.base)).call().map_err(|e| format!("GET {path}: {e}"))?;
        let mut body = Vec::new();
        std::io::Read::read_to_end(&mut response.into_reader(), &mut body).map_err(|e| e.to_string())?;
        Ok(body)
    }

    fn kill(mut self) -> Result<(), String> {
        self.child.kill().map_err(|e| e.to_string())?;
        self.child.wait().map_err(|e| e.to_string())?;
        Ok(())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn durability(work: &Path) -> Outcome {
    let store = work.join("history.db");
    let server = Server::start(&store)?;
    let created: serde_json::Value = ureq::post(&format!("{}/generate", server.base))
        .send_json(serde_json::json!({ "lyrics": "Hold my hand and walk with me, past the meadow to the sea." }))
        .map_err(|e| format!("POST /generate: {e}"))?
        .into_json()
        .map_err(|e| e.to_string())?;
    let id = created["id"].as_str().ok_or("no id in the created record")?.to_string();
    let path = format!("/songs/{id}/musicxml");
    let before = server.get(&path)?;
    server.kill()?;
    let server = Server::start(&store)?;
    let after = server.get(&path)?;
    let listed: serde_json::Value = serde_json::from_slice(&server.get("/songs")?).map_err(|e| e.to_string())?;
    server.kill()?;
    if before != after {
        return Err("MusicXML bytes differ after the restart".into());
    }
    if listed["items"][0]["id"] != id.as_str() {
        return Err("the record is missing from the history after the restart".into());
    }
    Ok(format!("record {id} survives a killed process, {} MusicXML bytes identical", after.len()))
}

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let suite = Suite::build();
    let desk = Desk::build();
    let with_suite = |f: &dyn Fn(&Suite) -> Outcome| suite.as_ref().map_err(Clone::clone).and_then(f);
    let with_both = |f: &dyn Fn(&Suite, &Desk) -> Outcome| match (&suite, &desk) {
        (Ok(s), Ok(d)) => f(s, d),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    let with_desk = |f: &dyn Fn(&Desk) -> Outcome| desk.as_ref().map_err(Clone::clone).and_then(f);

    let results: Vec<(&str, Outcome)> = vec![
        ("determinism", determinism(&work.path().join("c1"))),
        ("structural invariants", with_suite(&structural_invariants)),
        ("keyword alignment", with_suite(&keyword_alignment)),
        ("key confidence", with_desk(&key_confidence)),
        ("smoothness", with_desk(&smoothness)),
        ("metric oracle", oracle_equivalence()),
        ("transposition", transposition()),
        ("serialization", with_both(&|s, d| serialization(s, d, work.path()))),
        ("rhythm match", with_both(&rhythm_identity_and_compare)),
        ("offline image", offline_image(&work.path().join("c10"))),
        ("durability", durability(work.path())),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
