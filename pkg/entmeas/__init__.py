DIST_NAME = "entmeas"
