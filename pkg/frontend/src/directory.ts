// Parse the delivery server's directory document into plain objects.

import type { DirectoryKey, DirectoryService } from "./types.js";

export function parseDirectory(xml: string): DirectoryService[] {
  const doc = new DOMParser().parseFromString(xml, "application/xml");
  const root = doc.documentElement;
  if (!root || root.nodeName !== "directory") {
    throw new Error("unexpected directory document");
  }
  const services: DirectoryService[] = [];
  for (const node of Array.from(root.children)) {
    if (node.nodeName !== "service") continue;
    const keys: DirectoryKey[] = [];
    for (const key of Array.from(node.children)) {
      if (key.nodeName !== "key") continue;
      keys.push({
        name: key.getAttribute("name") ?? "",
        type: key.getAttribute("type") ?? "text",
        required: key.getAttribute("required") !== "false",
      });
    }
    services.push({
      name: node.getAttribute("name") ?? "",
      version: Number(node.getAttribute("version") ?? "1"),
      description: node.getAttribute("description") ?? "",
      keys,
    });
  }
  return services;
}
