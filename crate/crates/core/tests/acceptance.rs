//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cskb_core::consolidation::{cluster_triples, consolidate_subject, pick_representative, ConsolidationConfig};
use cskb_core::discovery::{filter_documents, reference_similarity, FilterConfig, RawDocument};
use cskb_core::embedding::EmbeddingTable;
use cskb_core::facets::{type_facet_heuristic, type_facets_external, FacetQuery};
use cskb_core::kb_io::{load_kb, read_kb, write_kb};
use cskb_core::lexicon::Lexicon;
use cskb_core::model::{FacetKey, FacetedAssertion, SubjectKind};
use cskb_core::oie::{extract_document, extract_sentence};
use cskb_core::parse::read_fixture;
use cskb_core::pipeline::{run_pipeline, PipelineConfig, Resources};
use cskb_core::query::{build_context, context_sentence, ContextRequest, FacetMode};
use cskb_core::scorer::{score_pairs_external, EmbeddingPairScorer, PoPair, ScorerProcess};
use cskb_core::subjects::{collect_aspects, collect_subgroups, harvest_chunks, route_assertions, ChunkOccurrence, ExpandConfig, SubgroupCluster};
use cskb_core::text::{singularize, tokens, Stopwords};
use cskb_core::Error;

type Outcome = Result<String, String>;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn lexicon() -> Lexicon {
    Lexicon::load(fixture("lexicon.json")).expect("fixture lexicon")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

// gold parses -> surface triples with facets

type Row = (String, String, String, Vec<String>);

fn row(s: &str, p: &str, o: &str, facets: &[&str]) -> Row {
    let mut f: Vec<String> = facets.iter().map(|x| x.to_string()).collect();
    f.sort();
    (s.into(), p.into(), o.into(), f)
}

fn gold_sentences() -> Outcome {
    let start = Instant::now();
    let docs = read_fixture(&std::fs::read_to_string(fixture("table1.conll")).unwrap()).map_err(|e| e.to_string())?;
    let expected: Vec<Vec<Row>> = vec![
        vec![
            row("They", "eat", "ptarmigans", &[]),
            row("They", "eat", "voles", &[]),
            row("They", "eat", "grouse", &[]),
        ],
        vec![row("Lynx", "are", "active", &["during evening", "during early morning"])],
        vec![row("Lions", "live", "for 20 years", &["in captivity"])],
        vec![row("Lions", "hunt", "gnus", &[]), row("Lions", "hunt", "antelopes", &[])],
        vec![row("Dogs", "are", "smart", &["extremely"])],
        vec![row("Elephants", "are", "good swimmers", &["extremely"])],
    ];
    ensure(docs.len() == expected.len(), || format!("{} fixture sentences", docs.len()))?;
    for (i, (doc, want)) in docs.iter().zip(&expected).enumerate() {
        let s = &doc.sentences[0];
        let mut got: Vec<Row> = extract_sentence(s)
            .iter()
            .map(|a| {
                let (subj, p, o, mut f) = a.render(s);
                f.sort();
                (subj, p, o, f)
            })
            .collect();
        got.sort();
        let mut want = want.clone();
        want.sort();
        ensure(got == want, || format!("sentence {}: got {got:?}, want {want:?}", i + 1))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("6/6 sentences in {:?}", start.elapsed()))
}

fn table6_queries() -> Vec<(FacetQuery, FacetKey)> {
    vec![
        (FacetQuery::new("lawyer", "represent", "clients", "in courts"), FacetKey::Location),
        (FacetQuery::new("elephant", "use", "their trunks", "to suck up water"), FacetKey::Purpose),
        (
            FacetQuery::new("artificial intelligence", "have", "number of applications", "in today's society"),
            FacetKey::Location,
        ),
        (FacetQuery::new("waiter", "deliver", "food", "to a table"), FacetKey::TransitiveObject),
        (FacetQuery::new("hog", "roll", "in mud", "to keep cool"), FacetKey::Purpose),
        (FacetQuery::new("wine", "be", "high", "in alcohol"), FacetKey::OtherQuality),
    ]
}

fn facet_typing() -> Outcome {
    let docs = read_fixture(&std::fs::read_to_string(fixture("table1.conll")).unwrap()).map_err(|e| e.to_string())?;
    let expect: [(usize, &[FacetKey]); 4] = [
        (1, &[FacetKey::Temporal, FacetKey::Temporal]),
        (2, &[FacetKey::Location]),
        (4, &[FacetKey::Degree]),
        (5, &[FacetKey::Degree]),
    ];
    for (i, want) in expect {
        let got: Vec<FacetKey> = extract_document(&docs[i])
            .iter()
            .flat_map(|e| e.facet_queries())
            .map(|q| type_facet_heuristic(&q))
            .collect();
        ensure(got == want, || format!("sentence {}: got {got:?}, want {want:?}", i + 1))?;
    }
    let set = table6_queries();
    let hits = set.iter().filter(|(q, k)| type_facet_heuristic(q) == *k).count();
    ensure(hits >= 4, || format!("only {hits}/6 on the facet set"))?;
    Ok(format!("gold facets exact, facet set {hits}/6"))
}

// clustering against a full-matrix single-linkage oracle

fn oracle_similarity(a: &(String, String), b: &(String, String), vocab: &BTreeMap<String, Vec<f32>>) -> f64 {
    if a == b {
        return 1.0;
    }
    let mean = |p: &(String, String)| -> Option<Vec<f64>> {
        let words: Vec<&Vec<f32>> = format!("{} {}", p.0, p.1)
            .split_whitespace()
            .filter_map(|w| vocab.get(w))
            .collect();
        if words.is_empty() {
            return None;
        }
        let dim = words[0].len();
        Some(
            (0..dim)
                .map(|d| {
                    let m = words.iter().map(|v| f64::from(v[d])).sum::<f64>() / words.len() as f64;
                    f64::from(m as f32)
                })
                .collect(),
        )
    };
    let (Some(u), Some(v)) = (mean(a), mean(b)) else { return 0.0 };
    let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(0.0, 1.0)
}

fn full_matrix_single_linkage(d: &[Vec<f64>], threshold: f64) -> BTreeSet<BTreeSet<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..d.len()).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let link = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| d[i][j])
                    .fold(f64::INFINITY, f64::min);
                if best.map_or(true, |(m, _, _)| link < m) {
                    best = Some((link, a, b));
                }
            }
        }
        match best {
            Some((link, a, b)) if link <= threshold => {
                let moved = clusters.remove(b);
                clusters[a].extend(moved);
            }
            _ => break,
        }
    }
    clusters.into_iter().map(|c| c.into_iter().collect()).collect()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<FacetedAssertion>, EmbeddingTable, BTreeMap<String, Vec<f32>>) {
    let words = [
        "eat", "have", "live", "be", "grass", "plants", "leaves", "water", "herds", "groups", "big", "large", "small",
        "trunk", "ears", "tusk",
    ];
    let dim = 5;
    let mut vocab: BTreeMap<String, Vec<f32>> = BTreeMap::new();
    let mut table = EmbeddingTable::new(dim);
    for w in words {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        table.insert(w, v.clone()).unwrap();
        vocab.insert(w.to_string(), v);
    }
    let predicates = ["eat", "have", "live in", "be"];
    let objects: Vec<&str> = words.iter().copied().chain(["unknownword"]).collect();
    let n = rng.gen_range(1..=50);
    let assertions = (0..n)
        .map(|_| {
            let p = predicates[rng.gen_range(0..predicates.len())];
            let mut o = objects[rng.gen_range(0..objects.len())].to_string();
            if rng.gen_bool(0.4) {
                o = format!("{} {o}", objects[rng.gen_range(0..objects.len())]);
            }
            FacetedAssertion::new("x", p, o).with_frequency(rng.gen_range(1..6))
        })
        .collect();
    (assertions, table, vocab)
}

fn clustering_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut mismatches = 0;
    let mut first = None;
    for instance in 0..200 {
        let (assertions, table, vocab) = random_instance(&mut rng);
        let threshold = rng.gen_range(0.02..0.6);
        let n = assertions.len();
        let pairs: Vec<(String, String)> = assertions.iter().map(|a| (a.predicate.clone(), a.object.clone())).collect();
        let d: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| 1.0 - oracle_similarity(&pairs[i], &pairs[j], &vocab)).collect())
            .collect();
        let want = full_matrix_single_linkage(&d, threshold);
        let scorer = EmbeddingPairScorer::new(&table);
        let got: BTreeSet<BTreeSet<usize>> = cluster_triples(&assertions, &table, &scorer, n, threshold, 64)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|g| g.into_iter().collect())
            .collect();
        if got != want {
            mismatches += 1;
            first.get_or_insert(instance);
        }
    }
    ensure(mismatches == 0, || format!("{mismatches}/200 partitions differ (first: instance {first:?})"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("200/200 partitions equal in {:?}", start.elapsed()))
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for instance in 0..100 {
        let (assertions, table, _) = random_instance(&mut rng);
        let total: u64 = assertions.iter().map(|a| u64::from(a.frequency)).sum();
        let cfg = ConsolidationConfig::default();
        let (out, _) = consolidate_subject(&assertions, &table, None, &cfg).map_err(|e| e.to_string())?;
        let sum: u64 = out.iter().map(|a| u64::from(a.frequency)).sum();
        ensure(sum == total, || format!("instance {instance}: {sum} out, {total} in"))?;

        let scorer = EmbeddingPairScorer::new(&table);
        let groups = cluster_triples(&assertions, &table, &scorer, 100, 0.3, 64).map_err(|e| e.to_string())?;
        for g in groups {
            let members: Vec<&FacetedAssertion> = g.iter().map(|&i| &assertions[i]).collect();
            let (rep, freq) = pick_representative(&members).ok_or("empty cluster")?;
            let max = members.iter().map(|a| a.frequency).max().unwrap();
            ensure(members[rep].frequency == max, || format!("instance {instance}: representative is not a max-frequency member"))?;
            let summed: u32 = members.iter().map(|a| a.frequency).sum();
            ensure(freq == summed, || format!("instance {instance}: cluster frequency {freq} != {summed}"))?;
        }
    }
    Ok("100 random KBs conserve frequency, representatives maximal".into())
}

// document filter

fn document_filter() -> Outcome {
    let sw = Stopwords::empty();
    let reference = RawDocument::new("ref", "alpha alpha alpha beta beta gamma delta epsilon");
    let identical = RawDocument::new("same", reference.body_text.clone());
    let disjoint = RawDocument::new("far", "zeta eta theta iota");
    let boundary = RawDocument::new("edge", "alpha alpha alpha beta kappa kappa kappa lambda lambda mu nu");
    let sim = reference_similarity(&boundary, &reference, &sw);
    ensure((sim - 0.55).abs() < 1e-12, || format!("boundary fixture similarity {sim}"))?;

    let cfg = FilterConfig::new(0.45, 500).map_err(|e| e.to_string())?;
    let (_, report) = filter_documents(vec![identical, disjoint, boundary], Some(&reference), &cfg, &sw);
    let kept: Vec<(&str, bool)> = report.entries.iter().map(|e| (e.id.as_str(), e.retained)).collect();
    ensure(kept == [("same", true), ("far", false), ("edge", true)], || format!("decisions {kept:?}"))?;

    let vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa"];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let docs: Vec<RawDocument> = (0..30)
        .map(|i| {
            let len = rng.gen_range(3..15);
            let body: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect();
            RawDocument::new(format!("d{i}"), body.join(" "))
        })
        .collect();
    let mut previous: BTreeSet<String> = BTreeSet::new();
    let mut sizes = Vec::new();
    for step in 1..=9 {
        let rho = f64::from(step) / 10.0;
        let cfg = FilterConfig::new(rho, 500).map_err(|e| e.to_string())?;
        let (kept, _) = filter_documents(docs.clone(), Some(&reference), &cfg, &sw);
        let ids: BTreeSet<String> = kept.into_iter().map(|d| d.id).collect();
        ensure(previous.is_subset(&ids), || format!("retained set shrank at rho {rho}"))?;
        sizes.push(ids.len());
        previous = ids;
    }
    Ok(format!("boundary kept, sweep sizes {sizes:?}"))
}

// subgroups and aspects

fn occ(text: &str, count: u32, ne: bool) -> ChunkOccurrence {
    ChunkOccurrence {
        text: text.into(),
        count,
        is_named_entity: ne,
    }
}

fn has_member(clusters: &[SubgroupCluster], m: &str) -> bool {
    clusters.iter().any(|c| c.members.contains(m))
}

fn subgroups_and_aspects() -> Outcome {
    let lex = lexicon();
    let cfg = ExpandConfig::default();
    let emb = EmbeddingTable::parse(
        "4 3\nlynx 0 0 1\ncanadian 1 0.05 0\ncanada 1 0 0\nlion 0 1 0.2\n",
    )
    .map_err(|e| e.to_string())?;

    let got = collect_subgroups(&[occ("canadian lynx", 3, false), occ("canada lynx", 2, false)], "lynx", &lex, &emb, &cfg);
    ensure(
        got.len() == 1 && got[0].members.len() == 2 && got[0].representative == "canadian lynx",
        || format!("Canadian/Canada lynx: {got:?}"),
    )?;

    let got = collect_subgroups(
        &[occ("canadian lynx", 3, false), occ("old male canadian lynx", 1, false)],
        "lynx",
        &lex,
        &emb,
        &cfg,
    );
    ensure(
        got.len() == 1 && got[0].representative == "canadian lynx" && got[0].support == 4,
        || format!("old male Canadian lynx: {got:?}"),
    )?;

    let got = collect_subgroups(
        &[occ("sea lion", 6, false), occ("ant lion", 5, false), occ("young lion", 3, false)],
        "lion",
        &lex,
        &emb,
        &cfg,
    );
    ensure(
        !has_member(&got, "sea lion") && !has_member(&got, "ant lion") && has_member(&got, "young lion"),
        || format!("sea lion/ant lion: {got:?}"),
    )?;

    let got = collect_subgroups(&[occ("will smith", 9, true), occ("village smith", 3, false)], "smith", &lex, &emb, &cfg);
    ensure(
        !has_member(&got, "will smith") && has_member(&got, "village smith"),
        || format!("Will Smith: {got:?}"),
    )?;

    let docs = read_fixture(
        "1\tLynx\tlynx\tNOUN\t2\tnsubj
2\thave\thave\tVERB\t0\tROOT
3\tblack\tblack\tADJ\t5\tamod
4\tear\tear\tNOUN\t5\tcompound
5\ttufts\ttuft\tNOUN\t2\tdobj
6\t.\t.\tPUNCT\t2\tpunct
",
    )
    .map_err(|e| e.to_string())?;
    let ex = extract_document(&docs[0]);
    let aspects = collect_aspects(&harvest_chunks(&docs), &ex, "lynx", &lex);
    ensure(
        aspects.contains_key("ear tuft") && !aspects.contains_key("black ear tuft"),
        || format!("ear tuft: {aspects:?}"),
    )?;

    let docs = read_fixture(
        "1\tThe\tthe\tDET\t2\tdet
2\telephant\telephant\tNOUN\t3\tnsubj
3\thas\thave\tVERB\t0\tROOT
4\ta\ta\tDET\t7\tdet
5\tvery\tvery\tADV\t6\tadvmod
6\tlong\tlong\tADJ\t7\tamod
7\ttrunk\ttrunk\tNOUN\t3\tdobj
8\t.\t.\tPUNCT\t3\tpunct
",
    )
    .map_err(|e| e.to_string())?;
    let ex = extract_document(&docs[0]);
    let aspects: BTreeMap<String, u32> = [("trunk".to_string(), 3)].into();
    let routing = route_assertions(&ex, &harvest_chunks(&docs), "elephant", &[], &aspects, &lex);
    let want = FacetedAssertion::new("elephant trunk", "be", "long");
    let hit = routing.aspect.iter().any(|a| {
        a.subject == want.subject
            && a.predicate == want.predicate
            && a.object == want.object
            && a.facets.len() == 1
            && a.facets[0].key == FacetKey::Degree
            && a.facets[0].value == "very"
    });
    let seen: Vec<String> = routing
        .aspect
        .iter()
        .map(|a| format!("({}, {}, {}, {:?})", a.subject, a.predicate, a.object, a.facets))
        .collect();
    ensure(hit, || format!("trunk routing produced {seen:?}"))?;
    Ok("5 subgroup/aspect behaviors and adjectival aspect routing".into())
}

// context builder against a brute-force ranking

fn oracle_context(query: &str, kb: &cskb_core::model::KnowledgeBase, mode: FacetMode, sw: &Stopwords, limit: usize) -> Vec<(String, usize)> {
    let query_tokens: BTreeSet<String> = tokens(query).filter(|t| !sw.contains(t)).collect();
    let query_words: BTreeSet<String> = tokens(query).map(|t| singularize(&t)).collect();
    let mut all: Vec<(usize, usize, String, String)> = Vec::new();
    for s in kb.subjects() {
        if !s.name.split_whitespace().all(|w| query_words.contains(&singularize(w))) {
            continue;
        }
        for (rank, a) in kb.assertions_of(&s.name).iter().enumerate() {
            let sentence = context_sentence(a, mode);
            let words: Vec<String> = tokens(&sentence).collect();
            let overlap = query_tokens.iter().filter(|t| words.contains(t)).count();
            all.push((overlap, rank, s.name.clone(), sentence));
        }
    }
    all.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = Vec::new();
    let mut length = 0;
    for (_, rank, subject, sentence) in all {
        let add = sentence.chars().count() + usize::from(!used.is_empty());
        if length + add > limit {
            break;
        }
        length += add;
        used.push((subject, rank));
    }
    used
}

fn context_builder() -> Outcome {
    let kb = load_kb(fixture("context_kb.jsonl")).map_err(|e| e.to_string())?;
    ensure(kb.assertion_count() == 50, || format!("{} assertions in fixture", kb.assertion_count()))?;
    let sw = Stopwords::default();
    let queries = [
        "When are rats awake?",
        "Where do rats live?",
        "What do rats eat?",
        "Why do rats gnaw on wood?",
        "When are lynx active?",
        "What do lynx hunt in snow?",
        "Why do lynx have thick fur?",
        "What do elephants drink?",
        "How do elephants drink water?",
        "Are elephants good swimmers?",
        "What is an elephant trunk like?",
        "Where do african elephants live?",
        "Why do african elephants have large ears?",
        "Are dogs smart?",
        "When do dogs need exercise?",
        "Why do dogs wag their tails?",
        "How long do lions live in captivity?",
        "What do lions hunt at night?",
        "Do lions and rats sleep during the day?",
        "What color are penguins?",
    ];
    for q in queries {
        for mode in [FacetMode::TriplesOnly, FacetMode::WithFacets] {
            let mut req = ContextRequest::new(q);
            if mode == FacetMode::WithFacets {
                req = req.with_facets();
            }
            let ctx = build_context(&req, &kb, &sw);
            let got: Vec<(String, usize)> = ctx.used.iter().map(|u| (u.subject.clone(), u.rank)).collect();
            let want = oracle_context(q, &kb, mode, &sw, 256);
            ensure(got == want, || format!("{q:?} ({mode:?}): got {got:?}, want {want:?}"))?;
            let len = ctx.text.chars().count();
            ensure(len <= 256, || format!("{q:?}: context has {len} characters"))?;
            if mode == FacetMode::WithFacets {
                for u in &ctx.used {
                    let a = &kb.assertions_of(&u.subject)[u.rank];
                    if let Some(top) = a.top_facet() {
                        ensure(u.sentence.contains(&top.value), || {
                            format!("{q:?}: `{}` lacks facet `{}`", u.sentence, top.value)
                        })?;
                    }
                }
            }
        }
    }
    Ok("20 queries match the oracle in both modes, all within 256 characters".into())
}

// end to end

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::load(fixture("elephant/pipeline.json")).map_err(|e| e.to_string())?;
    let res = Resources::load(&cfg).map_err(|e| e.to_string())?;
    let (kb, summary) = run_pipeline(&cfg, &res).map_err(|e| e.to_string())?;
    ensure(summary.failures.is_empty(), || format!("failures: {:?}", summary.failures.iter().map(|f| &f.error).collect::<Vec<_>>()))?;
    let count = |kind: SubjectKind| kb.subjects().filter(|s| s.kind == kind).count();
    let primary: usize = kb
        .subjects()
        .filter(|s| s.kind == SubjectKind::Primary)
        .map(|s| kb.assertions_of(&s.name).len())
        .sum();
    ensure(primary >= 5, || format!("{primary} primary assertions"))?;
    ensure(count(SubjectKind::Subgroup) >= 1, || "no subgroup".into())?;
    ensure(count(SubjectKind::Aspect) >= 1, || "no aspect".into())?;
    let mut buf = Vec::new();
    write_kb(&kb, &mut buf).map_err(|e| e.to_string())?;
    let back = read_kb(buf.as_slice()).map_err(|e| e.to_string())?;
    ensure(back == kb, || "dump round trip changed the KB".into())?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{primary} primary assertions, {} subgroups, {} aspects in {:?}",
        count(SubjectKind::Subgroup),
        count(SubjectKind::Aspect),
        start.elapsed()
    ))
}

// external scorer protocol

fn replay(args: &str, timeout: Duration) -> ScorerProcess {
    let cmd = format!("{} {args}", env!("CARGO_BIN_EXE_replay-scorer"));
    ScorerProcess::spawn(&cmd, timeout).expect("spawn replay scorer")
}

fn expect_protocol_error<T: std::fmt::Debug>(what: &str, r: cskb_core::Result<T>) -> Result<(), String> {
    match r {
        Err(Error::Protocol { .. }) => Ok(()),
        other => Err(format!("{what}: expected a protocol error, got {other:?}")),
    }
}

fn external_scorer() -> Outcome {
    let t = Duration::from_secs(10);
    let facets = fixture("scorer/facets.json");
    let pairs_file = fixture("scorer/pairs.json");

    let set = table6_queries();
    let queries: Vec<FacetQuery> = set.iter().map(|(q, _)| q.clone()).collect();
    let mut p = replay(&format!("--protocol facet --responses {}", facets.display()), t);
    let got = type_facets_external(&queries, &mut p, false).map_err(|e| e.to_string())?;
    let want: Vec<FacetKey> = set.iter().map(|(_, k)| *k).collect();
    ensure(got == want, || format!("facet labels {got:?}"))?;
    let again = type_facets_external(&queries[..2], &mut p, false).map_err(|e| e.to_string())?;
    ensure(again == want[..2], || "second batch on the same process differs".into())?;

    let recorded: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&pairs_file).unwrap()).map_err(|e| e.to_string())?;
    let pairs: Vec<(PoPair, PoPair)> = recorded
        .iter()
        .map(|r| {
            let q = &r["request"];
            let s = |k: &str| q[k].as_str().unwrap().to_string();
            (PoPair::new(s("p1"), s("o1")), PoPair::new(s("p2"), s("o2")))
        })
        .collect();
    let expected: Vec<f64> = recorded.iter().map(|r| r["response"]["similarity"].as_f64().unwrap()).collect();
    let refs: Vec<(&PoPair, &PoPair)> = pairs.iter().map(|(a, b)| (a, b)).collect();
    let mut p = replay(&format!("--protocol pair --responses {}", pairs_file.display()), t);
    let got = score_pairs_external(&refs, &mut p).map_err(|e| e.to_string())?;
    ensure(got == expected, || format!("pair scores {got:?}"))?;
    let emb = cskb_core::embedding::load_embeddings(fixture("scorer/embeddings.txt")).map_err(|e| e.to_string())?;
    let local = EmbeddingPairScorer::new(&emb);
    for ((a, b), want) in pairs.iter().zip(&expected) {
        let s = local.similarity(a, b);
        ensure((s - want).abs() < 1e-6, || format!("recording drifted from embedding score: {s} vs {want}"))?;
    }

    let one = &queries[..1];
    let pair = &refs[..1];
    expect_protocol_error("garbage line", type_facets_external(one, &mut replay("--protocol facet --mode garbage", t), false))?;
    expect_protocol_error(
        "unknown label",
        type_facets_external(one, &mut replay("--protocol facet --mode unknown-label", t), false),
    )?;
    expect_protocol_error("unknown id", type_facets_external(one, &mut replay("--protocol facet --mode wrong-id", t), false))?;
    expect_protocol_error(
        "out-of-range similarity",
        score_pairs_external(pair, &mut replay("--protocol pair --mode out-of-range", t)),
    )?;
    expect_protocol_error("garbage pair line", score_pairs_external(pair, &mut replay("--protocol pair --mode garbage", t)))?;

    let short = Duration::from_millis(300);
    match type_facets_external(one, &mut replay("--protocol facet --mode silent", short), false) {
        Err(Error::ScorerTimeout(_)) => {}
        other => return Err(format!("silent scorer: expected a timeout, got {other:?}")),
    }
    let fell_back = type_facets_external(one, &mut replay("--protocol facet --mode silent", short), true).map_err(|e| e.to_string())?;
    ensure(fell_back == [type_facet_heuristic(&one[0])], || format!("fallback gave {fell_back:?}"))?;
    match score_pairs_external(pair, &mut replay("--protocol pair --mode silent", short)) {
        Err(Error::ScorerTimeout(_)) => {}
        other => return Err(format!("silent pair scorer: expected a timeout, got {other:?}")),
    }
    Ok("recorded facet and pair replies replayed; malformed replies and silence rejected".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gold sentence extraction", gold_sentences),
        ("facet typing fixtures", facet_typing),
        ("clustering oracle equivalence", clustering_oracle),
        ("representative and frequency conservation", conservation),
        ("document filter", document_filter),
        ("subgroup and aspect rules", subgroups_and_aspects),
        ("context builder", context_builder),
        ("end-to-end smoke", end_to_end),
        ("external scorer protocol", external_scorer),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
