//! REST routes. See `openapi.yaml` at the crate root for the full contract.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;
use versetune::config::Config;
use versetune::image::{LengthPreference, LyricsProvider};
use versetune::musicxml::parse_musicxml;
use versetune::{evaluate_score, Error, KeyChoice, OutputKind, KEY_CATALOG};

use crate::generate::{generate, GenerateInput, Source};
use crate::store::{SongRecord, Store, StoreError};

pub const OPENAPI: &str = include_str!("../openapi.yaml");

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// `None` when neither stub mode nor a provider endpoint is configured.
    pub provider: Option<Arc<dyn LyricsProvider>>,
    pub config: Config,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/generate", post(generate_song))
        .route("/songs", get(list_songs))
        .route("/songs/{id}", get(get_song))
        .route("/songs/{id}/musicxml", get(get_musicxml))
        .route("/songs/{id}/midi", get(get_midi))
        .route("/songs/{id}/rating", post(rate_song))
        .route("/evaluate", post(evaluate))
        .route("/keys", get(list_keys))
        .route("/openapi.yaml", get(|| async { ([(header::CONTENT_TYPE, "application/yaml")], OPENAPI) }))
        .with_state(state)
}

/// An error response: `{"error": <kind>, "detail": <message>}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, detail: impl Into<String>) -> Self {
        ApiError { status, kind, detail: detail.into() }
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", detail)
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no song with id {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::EmptyLyrics => (StatusCode::UNPROCESSABLE_ENTITY, "EmptyLyrics"),
            Error::UnknownKey(_) => (StatusCode::BAD_REQUEST, "UnknownKey"),
            Error::UnsupportedMeter(_) => (StatusCode::BAD_REQUEST, "UnsupportedMeter"),
            Error::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "InvalidRequest"),
            Error::MalformedScore(_) => (StatusCode::BAD_REQUEST, "MalformedScore"),
            Error::NoPitches => (StatusCode::BAD_REQUEST, "NoPitches"),
            Error::ZeroVariance => (StatusCode::UNPROCESSABLE_ENTITY, "ZeroVariance"),
            Error::TooShort(_) => (StatusCode::UNPROCESSABLE_ENTITY, "TooShort"),
            Error::Undefined(_) => (StatusCode::UNPROCESSABLE_ENTITY, "Undefined"),
            Error::LyricMismatch(_) => (StatusCode::CONFLICT, "LyricMismatch"),
            Error::ProviderUnavailable(_) => (StatusCode::BAD_GATEWAY, "ProviderUnavailable"),
            Error::AuthFailure(_) => (StatusCode::BAD_GATEWAY, "AuthFailure"),
            Error::EmptyGeneration => (StatusCode::BAD_GATEWAY, "EmptyGeneration"),
            Error::CapacityExceeded(_) => (StatusCode::INTERNAL_SERVER_ERROR, "CapacityExceeded"),
            Error::AlignmentMismatch { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "AlignmentMismatch"),
            Error::Config(_) | Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        log::error!("store: {e}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "detail": self.detail }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking work (composition, SQLite, the provider call) off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

#[derive(Serialize)]
struct Links {
    #[serde(rename = "self")]
    this: String,
    musicxml: String,
    midi: String,
    rating: String,
}

#[derive(Serialize)]
struct SongView<'a> {
    #[serde(flatten)]
    record: &'a SongRecord,
    links: Links,
}

fn view(record: &SongRecord) -> SongView<'_> {
    let base = format!("/songs/{}", record.id);
    SongView {
        record,
        links: Links {
            musicxml: format!("{base}/musicxml"),
            midi: format!("{base}/midi"),
            rating: format!("{base}/rating"),
            this: base,
        },
    }
}

#[derive(Deserialize)]
struct GenerateBody {
    lyrics: Option<String>,
    image_base64: Option<String>,
    #[serde(default)]
    key: Option<String>,
    #[serde(default)]
    output: Option<OutputKind>,
    #[serde(default)]
    length_preference: Option<LengthPreference>,
    #[serde(default)]
    style_hint: Option<String>,
    #[serde(default)]
    instrument: Option<u8>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    title: Option<String>,
}

fn decode_image(text: &str) -> ApiResult<Vec<u8>> {
    // Accept both bare base64 and `data:<mime>;base64,<payload>` URLs.
    let payload = text.split_once(";base64,").map_or(text, |(_, p)| p).trim();
    base64::engine::general_purpose::STANDARD
        .decode(payload)
        .map_err(|e| ApiError::bad_request(format!("image_base64 is not valid base64: {e}")))
}

impl GenerateBody {
    fn into_input(self) -> ApiResult<GenerateInput> {
        let source = match (self.lyrics, self.image_base64) {
            (Some(text), None) => Source::Lyrics(text),
            (None, Some(image)) => Source::Image {
                bytes: decode_image(&image)?,
                length: self.length_preference.unwrap_or_default(),
                style_hint: self.style_hint,
            },
            _ => return Err(ApiError::bad_request("provide exactly one of lyrics or image_base64")),
        };
        let key: KeyChoice = self.key.as_deref().unwrap_or("random").parse()?;
        let instrument = self.instrument.unwrap_or(0);
        if instrument > 127 {
            return Err(ApiError::bad_request("instrument must be a General MIDI program 0-127"));
        }
        Ok(GenerateInput { source, key, output: self.output.unwrap_or_default(), instrument, seed: self.seed, title: self.title })
    }
}

async fn generate_song(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let input = parse_body::<GenerateBody>(&body)?.into_input()?;
    let record = blocking(move || {
        let record = generate(input, state.provider.as_deref(), &state.config)?;
        state.store.insert(&record)?;
        Ok(record)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view(&record))).into_response())
}

#[derive(Deserialize)]
struct Page {
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn list_songs(State(state): State<AppState>, Query(page): Query<Page>) -> ApiResult<Response> {
    let limit = page.limit.unwrap_or(20).min(200);
    let offset = page.offset.unwrap_or(0);
    let (items, total) = blocking(move || Ok(state.store.list(limit, offset)?)).await?;
    let items: Vec<SongView<'_>> = items.iter().map(view).collect();
    Ok(Json(json!({ "items": items, "total": total, "limit": limit, "offset": offset })).into_response())
}

async fn find(state: AppState, id: String) -> ApiResult<SongRecord> {
    blocking(move || state.store.get(&id)?.ok_or_else(|| ApiError::not_found(&id))).await
}

async fn get_song(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let record = find(state, id).await?;
    Ok(Json(view(&record)).into_response())
}

async fn get_musicxml(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let record = find(state, id).await?;
    Ok(([(header::CONTENT_TYPE, versetune::musicxml::MEDIA_TYPE)], record.musicxml).into_response())
}

async fn get_midi(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let record = find(state, id).await?;
    Ok(([(header::CONTENT_TYPE, versetune::midi::MEDIA_TYPE)], record.midi).into_response())
}

#[derive(Deserialize)]
struct RatingBody {
    stars: i64,
}

async fn rate_song(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let stars = parse_body::<RatingBody>(&body)?.stars;
    if !(1..=5).contains(&stars) {
        return Err(ApiError::bad_request(format!("stars must be between 1 and 5, got {stars}")));
    }
    let record = blocking(move || state.store.set_rating(&id, stars as u8)?.ok_or_else(|| ApiError::not_found(&id))).await?;
    Ok(Json(view(&record)).into_response())
}

#[derive(Deserialize)]
struct EvaluateBody {
    musicxml: String,
    reference: Option<String>,
}

async fn evaluate(body: Bytes) -> ApiResult<Response> {
    let body: EvaluateBody = parse_body(&body)?;
    let report = blocking(move || {
        let score = parse_musicxml(&body.musicxml)?;
        let reference = body.reference.as_deref().map(parse_musicxml).transpose()?;
        Ok(evaluate_score(&score, reference.as_ref())?)
    })
    .await?;
    Ok(Json(report).into_response())
}

async fn list_keys() -> Response {
    let keys: Vec<_> = KEY_CATALOG
        .iter()
        .map(|k| json!({ "name": k.to_string(), "mode": k.mode.name(), "fifths": k.fifths() }))
        .collect();
    Json(keys).into_response()
}
