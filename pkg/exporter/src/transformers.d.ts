// Ambient shim so the exporter compiles without the optional model
// runtime installed; the real package supplies its own types when present.
declare module '@xenova/transformers';
