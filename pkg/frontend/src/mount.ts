/** Browser entry point: renders the controller's snapshot into the page
 * and forwards interactions back. Logic stays in the other modules; this
 * file is intentionally a thin DOM shell.
 */

import { ApiClient } from "./api.js";
import { Controller, tileKey } from "./app.js";
import { barLayout, leavesUnder, orderByRanking, visibleAtThreshold, nodeById } from "./hpcp.js";
import { decodeP6, sceneOverlays } from "./scene.js";
import { countCards, histogramBars, PRESET_FILTERS } from "./summary.js";
import { gradientArrow, scoreColor, tileLayout, tileScore } from "./tiles.js";

const TILE_VIEW_SIZE = 480;

export async function mount(root: HTMLElement, apiBase = ""): Promise<Controller> {
  const api = new ApiClient(apiBase);
  const controller = new Controller(api);

  const summaryEl = section(root, "summary");
  const tilesEl = section(root, "landscape");
  const hpcpEl = section(root, "dimensions");
  const sceneEl = section(root, "scene");

  await controller.start();
  renderSummary();
  renderTiles();
  await renderHpcp();

  function renderSummary(): void {
    summaryEl.replaceChildren();
    const snap = controller.view();
    if (!snap.summary) return;
    for (const card of countCards(snap.summary)) {
      const div = el("div", "card");
      div.textContent = `${card.label}: ${card.value}`;
      if (card.key in PRESET_FILTERS) {
        div.classList.add("clickable");
        div.onclick = () => {
          void controller.applyPreset(card.key).then(renderTiles);
        };
      }
      summaryEl.appendChild(div);
    }
    void api.histogram("confidence").then((h) => {
      const strip = el("div", "histogram");
      for (const bar of histogramBars(h)) {
        const b = el("span", "bar");
        b.style.height = `${(bar.height * 40).toFixed(0)}px`;
        b.title = `${bar.x0.toFixed(2)}–${bar.x1.toFixed(2)}: ${bar.count}`;
        strip.appendChild(b);
      }
      summaryEl.appendChild(strip);
    });
  }

  function renderTiles(): void {
    tilesEl.replaceChildren();
    const snap = controller.view();
    if (!snap.grid) return;
    const box = el("div", "tile-grid");
    box.style.position = "relative";
    box.style.width = `${TILE_VIEW_SIZE}px`;
    box.style.height = `${TILE_VIEW_SIZE}px`;
    const metric = controller.store.get().metric;
    for (const laid of tileLayout(snap.grid, TILE_VIEW_SIZE, TILE_VIEW_SIZE)) {
      const d = el("div", "tile");
      d.style.cssText = `position:absolute;left:${laid.x}px;top:${laid.y}px;`
        + `width:${laid.w - 1}px;height:${laid.h - 1}px;`;
      d.style.background = scoreColor(tileScore(laid.tile, metric));
      if (snap.highlighted.has(tileKey(laid.tile))) d.classList.add("selected");
      d.title = `${laid.tile.count} objects`;
      const arrow = gradientArrow(laid.tile, laid.w / 2);
      if (metric === "gradient" && arrow) {
        const a = el("span", "arrow");
        a.style.transform = `rotate(${Math.atan2(arrow.dy, arrow.dx)}rad)`;
        d.appendChild(a);
      }
      const rep = laid.tile.representative;
      if (rep) d.onclick = () => void inspect(rep);
      box.appendChild(d);
    }
    tilesEl.appendChild(box);
  }

  async function renderHpcp(): Promise<void> {
    hpcpEl.replaceChildren();
    const snap = controller.view();
    if (!snap.tree) return;
    const byId = nodeById(snap.tree);
    const heights = snap.tree.nodes.map((n) => n.height);
    const threshold = (Math.max(...heights) || 1) * 0.25;
    const visible = visibleAtThreshold(snap.tree, threshold);
    let dims = visible.flatMap((id) => {
      const node = byId.get(id);
      return node?.label ? [node.label] : [leavesUnder(snap.tree!, id)[0] ?? ""];
    }).filter(Boolean);
    dims = orderByRanking(dims, snap.ranking).slice(0, 10);
    for (const dim of dims) {
      const lane = el("div", "dim-lane");
      const name = el("span", "dim-name");
      const mi = snap.ranking?.entries.find(([d]) => d === dim)?.[1];
      name.textContent = mi !== undefined ? `${dim} (${mi.toFixed(3)})` : dim;
      name.onclick = () => {
        void controller.assignAxis("x", dim).then(renderTiles);
      };
      lane.appendChild(name);
      const bar = await controller.loadBar(dim);
      const strip = el("div", "dim-bar");
      for (const rect of barLayout(bar)) {
        const r = el("span", rect.background ? "bg" : "fg");
        r.style.height = `${(rect.height * 32).toFixed(0)}px`;
        if (!rect.background) r.style.background = scoreColor(rect.score);
        strip.appendChild(r);
      }
      lane.appendChild(strip);
      hpcpEl.appendChild(lane);
    }
  }

  async function inspect(objectId: string): Promise<void> {
    const scene = await controller.inspect(objectId);
    sceneEl.replaceChildren();
    const canvas = el("canvas") as HTMLCanvasElement;
    const img = decodeP6(scene.image_p6);
    canvas.width = img.width;
    canvas.height = img.height;
    const ctx = canvas.getContext("2d");
    if (ctx) {
      const data = ctx.createImageData(img.width, img.height);
      for (let k = 0; k < img.width * img.height; k++) {
        data.data[4 * k] = img.pixels[3 * k]! * 255;
        data.data[4 * k + 1] = img.pixels[3 * k + 1]! * 255;
        data.data[4 * k + 2] = img.pixels[3 * k + 2]! * 255;
        data.data[4 * k + 3] = 255;
      }
      ctx.putImageData(data, 0, 0);
      ctx.lineWidth = 1;
      for (const overlay of sceneOverlays(scene)) {
        ctx.strokeStyle = overlay.color;
        const [x, y, w, h] = overlay.rect;
        ctx.strokeRect(x, y, w, h);
      }
    }
    sceneEl.appendChild(canvas);
    const strip = el("div", "walk-strip");
    sceneEl.appendChild(strip);
    const walk = await controller.loadWalk([-2, -1, -0.5, 0, 0.5, 1, 2]);
    for (const p of walk.points) {
      const cell = el("div", "walk-cell");
      cell.textContent = `${p.multiplier.toFixed(1)}: ${p.score.toFixed(2)}`;
      if (p.score < 0.5) cell.classList.add("failed");
      strip.appendChild(cell);
    }
  }

  return controller;
}

function section(root: HTMLElement, name: string): HTMLElement {
  const s = el("section", name);
  const h = el("h2");
  h.textContent = name;
  s.appendChild(h);
  root.appendChild(s);
  return s;
}

function el(tag: string, cls?: string): HTMLElement {
  const e = document.createElement(tag);
  if (cls) e.className = cls;
  return e;
}
