// Opinion map: an SVG scatter with hover tooltips and viewBox pan/zoom.
// Point colors come straight from the payload (red/blue/yellow).

import type { MapPayload } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

interface ViewBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

function dataExtent(payload: MapPayload): ViewBox {
  const xs = payload.points.map((p) => p.x);
  const ys = payload.points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const padX = Math.max((maxX - minX) * 0.1, 1e-6);
  const padY = Math.max((maxY - minY) * 0.1, 1e-6);
  return {
    x: minX - padX,
    y: minY - padY,
    w: maxX - minX + 2 * padX,
    h: maxY - minY + 2 * padY,
  };
}

export function renderMap(container: HTMLElement, payload: MapPayload): void {
  container.replaceChildren();
  if (payload.points.length === 0) {
    const empty = document.createElement("p");
    empty.className = "map-empty";
    empty.textContent = "No opinions to show for this topic yet.";
    container.append(empty);
    return;
  }

  const box = dataExtent(payload);
  const view: ViewBox = { ...box };
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "opinion-map");
  svg.setAttribute("width", "100%");
  svg.setAttribute("height", "360");
  svg.setAttribute("data-topic", payload.topic);
  const applyView = () =>
    svg.setAttribute("viewBox", `${view.x} ${view.y} ${view.w} ${view.h}`);
  applyView();

  const tooltip = document.createElement("div");
  tooltip.className = "map-tooltip";
  tooltip.style.display = "none";

  const radius = () => Math.max(box.w, box.h) / 80;
  for (const point of payload.points) {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(point.x));
    circle.setAttribute("cy", String(point.y));
    circle.setAttribute("r", String(radius()));
    circle.setAttribute("fill", point.color);
    circle.setAttribute("class", `map-point map-${point.color}`);
    circle.setAttribute("data-comment-id", point.id);
    if (point.color === "yellow") circle.setAttribute("stroke", "#8a6d00");
    circle.addEventListener("mouseenter", () => {
      tooltip.textContent = point.text;
      tooltip.style.display = "block";
    });
    circle.addEventListener("mouseleave", () => {
      tooltip.style.display = "none";
    });
    svg.append(circle);
  }

  // pan with drag, zoom with the wheel; pure viewBox math so it works
  // without any layout information
  let dragging = false;
  let last: { x: number; y: number } | null = null;
  svg.addEventListener("mousedown", (ev) => {
    dragging = true;
    last = { x: ev.clientX, y: ev.clientY };
  });
  svg.addEventListener("mousemove", (ev) => {
    if (!dragging || !last) return;
    const scale = view.w / 600; // nominal pixel width
    view.x -= (ev.clientX - last.x) * scale;
    view.y -= (ev.clientY - last.y) * scale;
    last = { x: ev.clientX, y: ev.clientY };
    applyView();
  });
  svg.addEventListener("mouseup", () => {
    dragging = false;
  });
  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = (ev as WheelEvent).deltaY > 0 ? 1.2 : 1 / 1.2;
    const cx = view.x + view.w / 2;
    const cy = view.y + view.h / 2;
    view.w *= factor;
    view.h *= factor;
    view.x = cx - view.w / 2;
    view.y = cy - view.h / 2;
    applyView();
  });

  container.append(svg, tooltip);
}
