//! Synthetic corpora shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use advertoscope::darkpattern::DisclosureKind;
use advertoscope::features::{FeatureDecl, FeatureSchema, Impute, SignalValue};
use advertoscope::forest::{Label, LabeledSignals};
use advertoscope::page::{ColorValue, RenderedSnapshot, SnapshotElement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gray text colors on white with contrast ratios computed independently
/// at 30 significant digits.
pub const GRAY_ON_WHITE: &[(&str, f64)] = &[
    ("#999999", 2.84902775529),
    ("#aaaaaa", 2.3231230535),
    ("#777777", 4.47808945358),
    ("#767676", 4.54222495961),
    ("#595959", 7.00472920804),
    ("#888888", 3.5448862153),
    ("#b3b3b3", 2.09670489056),
    ("#6b6b6b", 5.32921162977),
];

pub const BANNERS: &[&str] = &[
    "Advertorial",
    "Sponsored Content",
    "ANZEIGE",
    "Paid Content",
    "Advertentie",
    "Publirreportaje",
    "Διαφήμιση",
    "Conteúdo patrocinado",
    "תוכן ממומן",
];

pub const DISCLAIMERS: &[&str] = &[
    "Disclaimer: This website is an advertisement and not a news publication. Pictures are for illustration.",
    "This product is not intended to diagnose, treat, cure, or prevent any disease.",
    "We receive compensation for the products advertised here and may earn a commission on sales.",
    "Hinweis: Diese Website ist eine Werbung und keine Nachrichtenpublikation.",
    "Este sitio web es un anuncio y no una publicación de noticias.",
    "These statements have not been evaluated by the Food and Drug Administration.",
    "The story depicted on this site and the person depicted in the story are not actual news.",
    "Este site é um anúncio e não uma publicação de notícias.",
];

pub const BODY: &[&str] = &[
    "A mother of three from Ohio found a simple morning routine that changed her energy levels.",
    "Doctors were surprised when she described how little time the routine takes each day.",
    "She started by drinking a glass of warm water with lemon before breakfast.",
    "Within two weeks her friends began to notice that she looked more rested.",
    "The main ingredient comes from a plant that grows high in the mountains.",
    "Local stores sold out within days after the first customers shared their stories.",
    "Experts say the effect may come from better sleep and a healthier diet.",
    "Readers who tried the method reported mixed but mostly positive experiences.",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub text: String,
    pub kind: DisclosureKind,
    pub position_pct: f64,
    pub aa_pass: bool,
    pub below_median_font: bool,
}

pub struct PlantedPage {
    pub snapshot: RenderedSnapshot,
    pub planted: Vec<Planted>,
}

fn snap_el(text: &str, tag: &str, font: f64, fg: &str, top: f64, visible: bool) -> SnapshotElement {
    SnapshotElement {
        text: text.into(),
        tag: tag.into(),
        attributes: BTreeMap::new(),
        font_size_px: font,
        fg_color: ColorValue::parse_css(fg).unwrap(),
        bg_color: ColorValue::WHITE,
        top_px: top,
        height_px: (font * 1.4).round(),
        visible,
        ancestors: vec![],
        bg_image: false,
    }
}

/// Twenty rendered pages, each with a banner near the top, eight 16px body
/// paragraphs and a disclaimer near the bottom. Every visible page has a
/// median font of 16px.
pub fn disclosure_corpus() -> Vec<PlantedPage> {
    (0..20usize)
        .map(|p| {
            let height = 2400.0 + 37.0 * p as f64;
            let mut elements = Vec::new();
            let mut planted = Vec::new();

            let (banner_fg, banner_contrast) = GRAY_ON_WHITE[(p * 3) % GRAY_ON_WHITE.len()];
            let banner_font = [20.0, 16.0, 13.0, 18.0][p % 4];
            let banner_top = 8.0 + (p % 5) as f64 * 6.0;
            let banner = BANNERS[p % BANNERS.len()];
            elements.push(snap_el(banner, "div", banner_font, banner_fg, banner_top, true));
            planted.push(Planted {
                text: banner.to_string(),
                kind: DisclosureKind::Banner,
                position_pct: banner_top / height * 100.0,
                aa_pass: banner_contrast >= 4.5,
                below_median_font: banner_font < 16.0,
            });

            elements.push(snap_el("Local Mom Shares Her Morning Secret", "h1", 32.0, "#111111", 60.0, true));
            for (i, text) in BODY.iter().enumerate() {
                let top = 140.0 + i as f64 * (height * 0.8 - 140.0) / BODY.len() as f64;
                elements.push(snap_el(text, "p", 16.0, "#000000", top.round(), true));
            }
            if p % 3 == 0 {
                elements.push(snap_el("Advertorial", "span", 9.0, "#cccccc", height * 0.85, false));
            }

            let (disc_fg, disc_contrast) = GRAY_ON_WHITE[(p * 5 + 1) % GRAY_ON_WHITE.len()];
            let disc_font = if p % 10 == 7 { 16.0 } else { [11.0, 12.0, 10.0, 13.0][p % 4] };
            let disc_top = (height * (0.9 + (p % 8) as f64 * 0.01) * 10.0).round() / 10.0;
            let disc = DISCLAIMERS[p % DISCLAIMERS.len()];
            elements.push(snap_el(disc, "p", disc_font, disc_fg, disc_top, true));
            planted.push(Planted {
                text: disc.to_string(),
                kind: DisclosureKind::Disclaimer,
                position_pct: disc_top / height * 100.0,
                aa_pass: disc_contrast >= 4.5,
                below_median_font: disc_font < 16.0,
            });

            PlantedPage {
                snapshot: RenderedSnapshot {
                    url: format!("https://www.health-news-{p}.com/story/{p}"),
                    elements,
                    document_height_px: height,
                },
                planted,
            }
        })
        .collect()
}

pub struct StaticFixture {
    pub html: String,
    pub language: &'static str,
    pub advertorial: bool,
}

const POSITIVE: &[(&str, &str)] = &[
    ("en", r#"<div class="top-label">Advertorial</div><h1>Her knees stopped aching</h1><p>A retired teacher walks again without pain.</p>"#),
    ("en", r#"<h1>The gadget everyone wants</h1><p>Stock is running low.</p><footer><small>This site is an advertisement and not an actual news site.</small></footer>"#),
    ("en", r#"<p>Read how one father saved on insurance.</p><p><span>Sponsored Post</span> by a partner brand.</p>"#),
    ("nl", r#"<div>ADVERTENTIE</div><h1>Nieuwe methode tegen rugpijn</h1><p>Veel lezers zijn enthousiast.</p>"#),
    ("nl", r#"<h1>Een wondermiddel uit de natuur</h1><footer><p>Deze website is een advertentie en geen nieuwspublicatie.</p></footer>"#),
    ("de", r#"<div class="kicker">Anzeige</div><h1>So schlafen Sie wieder gut</h1><p>Tausende haben es getestet.</p>"#),
    ("de", r#"<h1>Das Geheimnis der Bergkräuter</h1><p>Viele Leser berichten von Erfolgen.</p><p>Dies ist eine Werbeanzeige und kein echter Nachrichtenartikel.</p>"#),
    ("el", r#"<div>ΔΙΑΦΗΜΙΣΗ</div><h1>Το μυστικό της γιαγιάς</h1><p>Οι αναγνώστες είναι ενθουσιασμένοι.</p>"#),
    ("el", r#"<h1>Νέα μέθοδος για τον ύπνο</h1><footer>Χορηγούμενο περιεχόμενο από συνεργάτη.</footer>"#),
    ("he", r#"<div>תוכן ממומן</div><h1>הסוד של הרופאים</h1><p>אלפי קוראים כבר ניסו.</p>"#),
    ("he", r#"<h1>שיטה חדשה לשינה טובה</h1><footer><p>אתר זה הוא פרסומת ואינו פרסום חדשותי.</p></footer>"#),
    ("es", r#"<div>Contenido patrocinado</div><h1>El truco de los abuelos</h1><p>Miles de lectores lo han probado.</p>"#),
    ("es", r#"<h1>Ahorra en tu factura de luz</h1><footer>Esto es un anuncio y no un artículo de noticias real.</footer>"#),
    ("pt", r#"<div>Publieditorial</div><h1>O segredo das montanhas</h1><p>Milhares de leitores aprovam.</p>"#),
    ("pt", r#"<h1>Durma melhor esta noite</h1><footer><p>Isto é um anúncio e não um artigo de notícias real.</p></footer>"#),
];

const CLEAN: &[(&str, &str)] = &[
    ("en", "<h1>City council approves new bike lanes</h1><p>The plan adds twelve kilometres of protected lanes by next spring.</p><p>Residents can comment at the public hearing on Monday.</p>"),
    ("en", "<h1>Storm expected this weekend</h1><p>Forecasters warn of strong winds along the coast.</p><footer><small>Photo: staff reporter.</small></footer>"),
    ("en", "<article><h2>Library extends opening hours</h2><p>The central branch will stay open until ten in the evening.</p></article>"),
    ("nl", "<h1>Gemeente opent nieuw zwembad</h1><p>Het bad is vanaf zaterdag open voor alle inwoners.</p>"),
    ("nl", "<h1>Treinverkeer hersteld na storing</h1><p>Reizigers moesten urenlang wachten op het station.</p>"),
    ("de", "<h1>Stadt plant neuen Park</h1><p>Die Bauarbeiten beginnen im Herbst und dauern zwei Jahre.</p>"),
    ("de", "<h1>Wetter: Sonnig und warm</h1><p>Am Wochenende steigen die Temperaturen auf dreißig Grad.</p>"),
    ("el", "<h1>Νέο μουσείο στην Αθήνα</h1><p>Το μουσείο ανοίγει τις πόρτες του τον επόμενο μήνα.</p>"),
    ("el", "<h1>Καιρός: βροχές στα βόρεια</h1><p>Οι θερμοκρασίες θα πέσουν σημαντικά.</p>"),
    ("he", "<h1>עירייה פותחת גן ציבורי חדש</h1><p>הגן יפתח לציבור בשבוע הבא.</p>"),
    ("he", "<h1>תחזית מזג האוויר</h1><p>צפוי גשם ברוב חלקי הארץ.</p>"),
    ("es", "<h1>La ciudad inaugura una biblioteca</h1><p>El edificio tiene espacio para cien mil libros.</p>"),
    ("es", "<h1>Previsión del tiempo</h1><p>Se esperan lluvias en el norte durante el fin de semana.</p>"),
    ("pt", "<h1>Cidade ganha novo parque</h1><p>As obras terminam no final do ano.</p>"),
    ("pt", "<h1>Previsão do tempo</h1><p>Chuva forte é esperada no litoral.</p>"),
];

fn html_page(lang: &str, url: &str, body: &str) -> String {
    format!(
        r#"<!doctype html><html lang="{lang}"><head><meta charset="utf-8"><title>Story</title><link rel="canonical" href="{url}"></head><body>{body}</body></html>"#
    )
}

/// Thirty static pages: the first fifteen carry a disclosure phrase, the
/// rest are ordinary news in the same seven languages.
pub fn structure_corpus() -> Vec<StaticFixture> {
    POSITIVE
        .iter()
        .map(|p| (p, true))
        .chain(CLEAN.iter().map(|p| (p, false)))
        .enumerate()
        .map(|(i, ((lang, body), advertorial))| StaticFixture {
            html: html_page(lang, &format!("https://www.{lang}-daily-{i}.com/article/{i}"), body),
            language: lang,
            advertorial,
        })
        .collect()
}

const NEUTRAL_SENTENCES: &[&str] = &[
    "The recipe needs two cups of flour and a pinch of salt.",
    "Traffic on the main road was slow this morning.",
    "Our reporter spoke with several families in the area.",
    "The team won the final match after extra time.",
    "Prices for fresh vegetables rose slightly in June.",
    "Scientists measured the water quality at six locations.",
    "The museum will host a new exhibition next month.",
    "Many readers wrote in to share their own experiences.",
];

const PHRASE_SENTENCES: &[&str] = &[
    "Advertorial",
    "Sponsored Content",
    "This page is an advertisement for a dietary supplement.",
    "Anzeige",
    "Results may vary from person to person and are not guaranteed.",
    "Contenido patrocinado",
    "The owner has a monetary connection to the product and services advertised on the site.",
];

const SELECTOR_BLOCKS: &[&str] = &[
    r#"<div class="testimonial"><p>I feel ten years younger.</p></div>"#,
    r#"<div id="fbcomments"><p>Works for me too, thanks.</p></div>"#,
    r#"<ul class="comments-list"><li class="comment">Ordered two bottles.</li></ul>"#,
    r#"<div class="customer-reviews"><p>Five stars from me.</p></div>"#,
];

pub struct RandomPage {
    pub url: String,
    pub html: String,
    pub domain: String,
    pub planted_structure: bool,
}

pub const RANDOM_DOMAINS: usize = 40;

pub fn random_domain(k: usize) -> String {
    format!("site{k}.com")
}

/// Odd-numbered domains behave like scam sites; every fifth domain has no
/// recorded engine output.
pub fn domain_is_scam(k: usize) -> bool {
    k % 2 == 1
}

pub fn domain_has_signals(k: usize) -> bool {
    k % 5 != 0
}

pub fn random_pages(n: usize, seed: u64) -> Vec<RandomPage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let k = rng.random_range(0..RANDOM_DOMAINS);
            let mut body = String::new();
            let mut planted = false;
            let blocks = rng.random_range(1..8);
            for _ in 0..blocks {
                let roll: f64 = rng.random();
                if roll < 0.08 {
                    body.push_str(&format!(
                        "<p>{}</p>",
                        PHRASE_SENTENCES[rng.random_range(0..PHRASE_SENTENCES.len())]
                    ));
                    planted = true;
                } else if roll < 0.13 {
                    body.push_str(SELECTOR_BLOCKS[rng.random_range(0..SELECTOR_BLOCKS.len())]);
                    planted = true;
                } else {
                    body.push_str(&format!(
                        "<p>{}</p>",
                        NEUTRAL_SENTENCES[rng.random_range(0..NEUTRAL_SENTENCES.len())]
                    ));
                }
            }
            let url = format!("https://www.{}/story/{i}", random_domain(k));
            RandomPage {
                html: html_page("en", &url, &body),
                url,
                domain: random_domain(k),
                planted_structure: planted,
            }
        })
        .collect()
}

/// Small three-feature schema used by the pipeline fixtures.
pub fn small_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureDecl::numeric("urlvoid.detections", Impute::Median),
        FeatureDecl::numeric("scamadviser.trust_score", Impute::Median),
        FeatureDecl::numeric("local.page_size_chars", Impute::Median),
    ])
    .unwrap()
}

pub fn small_signals(rng: &mut impl Rng, scam: bool) -> BTreeMap<String, SignalValue> {
    let (det, trust) = if scam {
        (rng.random_range(5.0..12.0), rng.random_range(5.0..35.0))
    } else {
        (rng.random_range(0.0..2.0), rng.random_range(65.0..98.0))
    };
    BTreeMap::from([
        ("urlvoid.detections".to_string(), SignalValue::Number(f64::round(det))),
        ("scamadviser.trust_score".to_string(), SignalValue::Number(f64::round(trust))),
    ])
}

pub fn small_training_rows(n: usize, seed: u64) -> Vec<LabeledSignals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let scam = i % 2 == 1;
            let mut signals = small_signals(&mut rng, scam);
            signals.insert("local.page_size_chars".into(), SignalValue::Number(rng.random_range(500.0..5000.0)));
            LabeledSignals {
                domain: format!("train{i}.com"),
                label: if scam { Label::Suspicious } else { Label::Benign },
                signals,
            }
        })
        .collect()
}

/// Replay records for the random-page domains, one line per engine and domain.
pub fn replay_jsonl(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for k in (0..RANDOM_DOMAINS).filter(|&k| domain_has_signals(k)) {
        let signals = small_signals(&mut rng, domain_is_scam(k));
        for engine in ["urlvoid", "scamadviser"] {
            let own: BTreeMap<&String, &SignalValue> =
                signals.iter().filter(|(name, _)| name.starts_with(engine)).collect();
            let line = serde_json::json!({"engine_id": engine, "domain": random_domain(k), "signals": own});
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    out
}
