//! The /v1 HTTP API.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | /v1/sessions | | `{session_id}` |
//! | GET | /v1/sessions/{id} | | session summary |
//! | GET | /v1/schema | | attribute schema |
//! | POST | /v1/sessions/{id}/query | `{Kind: {Name: Value}}` | `{candidates}` |
//! | POST | /v1/sessions/{id}/select | `{kind, record_id}` | `{selections}` |
//! | POST | /v1/sessions/{id}/preview | `{mode}` | `{layout, image_url, mode, seam_contrast}` |
//! | POST | /v1/sessions/{id}/adjust | `{slot: {drow, dcol}}` | as preview |
//! | POST | /v1/sessions/{id}/finalize | | `{face_id}` |
//! | GET | /v1/sessions/{id}/preview/image | | current preview |
//! | GET | /v1/components/{id}/image | | component image |
//! | GET | /v1/faces/{id} | | stored face |
//! | GET | /v1/faces/{id}/image | | stored face image |
//!
//! Images are PGM unless the request's `Accept` header asks for PNG (or the
//! URL carries `?format=png`). Errors are `{code, message, detail}` where
//! `detail` names the slot, attribute or kind at fault when there is one.

use std::collections::BTreeMap;
use std::future::Future;
use std::io::Write;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fasy_core::catalog::schema_document;
use fasy_core::service::Candidates;
use fasy_core::{
    write_pgm, Assignment, ComponentKind, FaceDescription, FaceQuery, GrayImage, Layout, LayoutConstants,
    LayoutOverride, PlacementMode, Preview, Provenance, RecordId, ServiceError, Session, Workbench,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::commands::{open_existing, read_optional};
use crate::{CliError, ServeArgs};

type Shared = Arc<Workbench>;

pub fn router(workbench: Shared) -> Router {
    Router::new()
        .route("/v1/schema", get(schema))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/query", post(submit_query))
        .route("/v1/sessions/{id}/select", post(select))
        .route("/v1/sessions/{id}/preview", post(preview))
        .route("/v1/sessions/{id}/preview/image", get(preview_image))
        .route("/v1/sessions/{id}/adjust", post(adjust))
        .route("/v1/sessions/{id}/finalize", post(finalize))
        .route("/v1/components/{id}/image", get(component_image))
        .route("/v1/faces/{id}", get(face))
        .route("/v1/faces/{id}/image", get(face_image))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .with_state(workbench)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    workbench: Shared,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(workbench))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Entry point for `fasy serve`. Prints `listening http://ADDR` once bound.
pub fn run(args: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = open_existing(&args.catalog)?;
    let constants = read_optional::<LayoutConstants>(args.constants.as_deref())?;
    let workbench = Arc::new(Workbench::with_constants(catalog, constants));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::internal(format!("runtime: {e}")))?;
    runtime.block_on(async {
        let listener = TcpListener::bind(args.bind)
            .await
            .map_err(|e| CliError::internal(format!("cannot bind {}: {e}", args.bind)))?;
        let addr = listener.local_addr().map_err(|e| CliError::internal(e.to_string()))?;
        writeln!(out, "listening http://{addr}")
            .and_then(|()| out.flush())
            .map_err(|e| CliError::internal(e.to_string()))?;
        tracing::info!(%addr, "serving");
        serve(listener, workbench, shutdown_signal())
            .await
            .map_err(|e| CliError::internal(format!("server: {e}")))?;
        tracing::info!("shut down");
        Ok(())
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {}
        () = term => {}
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: BTreeMap<&'static str, String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: BTreeMap::new(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownSession(_) | ServiceError::UnknownRecord(_) => StatusCode::NOT_FOUND,
            ServiceError::NotACandidate { .. }
            | ServiceError::InvalidState { .. }
            | ServiceError::IncompleteSelection(_) => StatusCode::CONFLICT,
            ServiceError::SchemaViolation(_) | ServiceError::Compose(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Catalog(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let Some(slot) = e.slot() {
            err.detail.insert("slot", slot.to_string());
        }
        if let Some(attribute) = e.attribute() {
            err.detail.insert("attribute", attribute.to_string());
        }
        if let Some(kind) = e.kind() {
            err.detail.insert("kind", kind.to_string());
        }
        err
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message);
        } else {
            tracing::debug!(code = self.code, message = %self.message);
        }
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs workbench calls off the async workers; they take blocking locks and
/// may composite a face.
async fn blocking<T: Send + 'static>(
    wb: Shared,
    f: impl FnOnce(&Workbench) -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(move || f(&wb))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(ApiError::from)
}

async fn schema() -> Json<Value> {
    Json(serde_json::to_value(schema_document()).unwrap_or(Value::Null))
}

async fn create_session(State(wb): State<Shared>) -> (StatusCode, Json<Value>) {
    let id = wb.create_session();
    tracing::info!(session = %id, "created");
    (StatusCode::CREATED, Json(json!({ "session_id": id })))
}

#[derive(Serialize)]
struct SessionView {
    session_id: String,
    state: String,
    query: FaceQuery,
    selections: BTreeMap<ComponentKind, RecordId>,
    overrides: LayoutOverride,
    mode: PlacementMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    preview: Option<PreviewView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    face_id: Option<RecordId>,
}

#[derive(Serialize)]
struct PreviewView {
    layout: Layout,
    image_url: String,
    mode: PlacementMode,
    seam_contrast: u8,
}

impl PreviewView {
    fn new(session: &str, p: &Preview) -> Self {
        PreviewView {
            layout: p.layout,
            image_url: format!("/v1/sessions/{session}/preview/image"),
            mode: p.mode,
            seam_contrast: p.seam_contrast,
        }
    }
}

impl From<Session> for SessionView {
    fn from(s: Session) -> Self {
        SessionView {
            preview: s.preview.as_ref().map(|p| PreviewView::new(&s.id, p)),
            session_id: s.id,
            state: s.state.to_string(),
            query: s.query,
            selections: s.selections,
            overrides: s.overrides,
            mode: s.mode,
            face_id: s.face_id,
        }
    }
}

async fn get_session(State(wb): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = blocking(wb, move |wb| wb.session(&id)).await?;
    Ok(Json(session.into()))
}

#[derive(Serialize)]
struct CandidateView {
    id: RecordId,
    kind: ComponentKind,
    attributes: Assignment,
    width: usize,
    height: usize,
    image_url: String,
}

async fn submit_query(
    State(wb): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<FaceQuery>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(query) = body?;
    let found: Candidates = blocking(wb, move |wb| wb.submit_query(&id, query)).await?;
    let candidates: BTreeMap<ComponentKind, Vec<CandidateView>> = found
        .into_iter()
        .map(|(kind, list)| {
            let views = list
                .into_iter()
                .map(|c| CandidateView {
                    image_url: format!("/v1/components/{}/image", c.id),
                    id: c.id,
                    kind: c.kind,
                    attributes: c.attributes,
                    width: c.width,
                    height: c.height,
                })
                .collect();
            (kind, views)
        })
        .collect();
    Ok(Json(json!({ "candidates": candidates })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectBody {
    kind: ComponentKind,
    record_id: RecordId,
}

async fn select(
    State(wb): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<SelectBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(SelectBody { kind, record_id }) = body?;
    let selections = blocking(wb, move |wb| wb.select_component(&id, kind, record_id)).await?;
    Ok(Json(json!({ "selections": selections })))
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct PreviewBody {
    mode: PlacementMode,
}

async fn preview(
    State(wb): State<Shared>,
    Path(id): Path<String>,
    body: Option<Json<PreviewBody>>,
) -> ApiResult<Json<PreviewView>> {
    let mode = body.map(|Json(b)| b.mode).unwrap_or_default();
    let session = id.clone();
    let p = blocking(wb, move |wb| wb.generate_preview(&session, mode)).await?;
    Ok(Json(PreviewView::new(&id, &p)))
}

async fn adjust(
    State(wb): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<LayoutOverride>, JsonRejection>,
) -> ApiResult<Json<PreviewView>> {
    let Json(delta) = body?;
    let session = id.clone();
    let p = blocking(wb, move |wb| wb.adjust_placement(&session, &delta)).await?;
    Ok(Json(PreviewView::new(&id, &p)))
}

async fn finalize(State(wb): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = id.clone();
    let face_id = blocking(wb, move |wb| wb.finalize(&session)).await?;
    tracing::info!(session = %id, face_id, "finalized");
    Ok(Json(json!({ "face_id": face_id })))
}

#[derive(Deserialize, Default)]
struct ImageParams {
    format: Option<String>,
}

async fn preview_image(
    State(wb): State<Shared>,
    Path(id): Path<String>,
    Query(params): Query<ImageParams>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let session = blocking(wb, move |wb| wb.session(&id)).await?;
    let preview = session
        .preview
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "NoPreview", "the session has no preview"))?;
    image_response(&preview.image, &params, &headers)
}

async fn component_image(
    State(wb): State<Shared>,
    Path(id): Path<RecordId>,
    Query(params): Query<ImageParams>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let image = wb
        .catalog()
        .component(id)
        .map(|r| r.image.clone())
        .ok_or(ServiceError::UnknownRecord(id))?;
    image_response(&image, &params, &headers)
}

#[derive(Serialize)]
struct FaceView {
    id: RecordId,
    description: FaceDescription,
    provenance: Provenance,
    image_url: String,
}

async fn face(State(wb): State<Shared>, Path(id): Path<RecordId>) -> ApiResult<Json<FaceView>> {
    let catalog = wb.catalog();
    let face = catalog.face(id).ok_or(ServiceError::UnknownRecord(id))?;
    Ok(Json(FaceView {
        id,
        description: face.description.clone(),
        provenance: face.provenance.clone(),
        image_url: format!("/v1/faces/{id}/image"),
    }))
}

async fn face_image(
    State(wb): State<Shared>,
    Path(id): Path<RecordId>,
    Query(params): Query<ImageParams>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let image = wb
        .catalog()
        .face(id)
        .map(|f| f.image.clone())
        .ok_or(ServiceError::UnknownRecord(id))?;
    image_response(&image, &params, &headers)
}

const PGM_TYPE: &str = "image/x-portable-graymap";

fn wants_png(params: &ImageParams, headers: &HeaderMap) -> bool {
    if let Some(format) = &params.format {
        return format.eq_ignore_ascii_case("png");
    }
    let accept = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default();
    accept.contains("image/png") && !accept.contains(PGM_TYPE)
}

fn image_response(image: &GrayImage, params: &ImageParams, headers: &HeaderMap) -> ApiResult<Response> {
    let (content_type, bytes) = if wants_png(params, headers) {
        ("image/png", encode_png(image)?)
    } else {
        (PGM_TYPE, write_pgm(image))
    };
    Ok((
        [
            (header::CONTENT_TYPE, content_type),
            (header::CACHE_CONTROL, "no-store"),
        ],
        bytes,
    )
        .into_response())
}

fn encode_png(image: &GrayImage) -> ApiResult<Vec<u8>> {
    let internal = |e: png::EncodingError| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string());
    let mut buf = Vec::new();
    let mut encoder = png::Encoder::new(&mut buf, image.cols() as u32, image.rows() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(internal)?;
    writer.write_image_data(image.pixels()).map_err(internal)?;
    writer.finish().map_err(internal)?;
    Ok(buf)
}
